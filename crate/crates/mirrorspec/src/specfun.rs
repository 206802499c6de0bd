//! Special-function kernels: the modified Bessel function of purely
//! imaginary order, complex gamma and digamma on the line 1 + iy, the
//! harmonic number of imaginary argument, and the hyperbolic cosecant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, QuadratureConfig};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// Arguments of K_{i nu}(x): real order parameter nu >= 0 and argument x > 0.
///
/// Negative orders are folded to |nu| on construction (K is even in nu).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagOrderBesselArgs {
    nu: f64,
    x: f64,
}

impl ImagOrderBesselArgs {
    pub fn new(nu: f64, x: f64) -> Result<Self> {
        if !nu.is_finite() || !x.is_finite() {
            return Err(Error::Domain {
                context: "ImagOrderBesselArgs",
                message: format!("non-finite input nu = {nu}, x = {x}"),
            });
        }
        if x <= 0.0 {
            return Err(Error::Domain {
                context: "ImagOrderBesselArgs",
                message: format!("x must be > 0, got {x}"),
            });
        }
        Ok(ImagOrderBesselArgs { nu: nu.abs(), x })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// K_{i nu}(x) through its real integral representation
/// `int_0^inf exp(-x cosh t) cos(nu t) dt`.
///
/// The range is truncated where the envelope drops below `abs_tol * 1e-2`
/// and the remainder is certified analytically. For strongly oscillatory
/// orders the range is pre-split at the zeros of cos(nu t).
pub fn bessel_k_imag_order(args: ImagOrderBesselArgs, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let (nu, x) = (args.nu, args.x);

    // envelope threshold: exp(-x cosh t_max) < abs_tol * 1e-2
    let envelope_log = (1e2 / cfg.abs_tol).ln();
    let t_max = (envelope_log / x).max(2.0).acosh();
    // certified remainder: cosh t >= cosh t_max + sinh(t_max) (t - t_max)
    let tail_bound = (-x * t_max.cosh()).exp() / (x * t_max.sinh());

    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cos();

    let mut partition = vec![0.0];
    if nu * t_max > 6.0 {
        // zeros of cos(nu t)
        let mut k = 0usize;
        loop {
            let t = (k as f64 + 0.5) * std::f64::consts::PI / nu;
            if t >= t_max {
                break;
            }
            partition.push(t);
            k += 1;
        }
    } else {
        partition.push(t_max / 3.0);
    }
    partition.push(t_max);

    let r = integrate_adaptive(&f, &partition, cfg.abs_tol, cfg.rel_tol, cfg.max_refinements)?;
    let total_err = r.est_error + tail_bound;
    // the roundoff floor is set by the scale of |integrand|, which exceeds
    // |K| wherever the cosine cancels
    let target = cfg
        .abs_tol
        .max(cfg.rel_tol * r.value.abs())
        .max(300.0 * f64::EPSILON * r.resabs);
    if total_err > target {
        return Err(Error::NonConvergence {
            context: "bessel_k_imag_order",
            achieved: total_err,
            required: target,
        });
    }
    if !r.value.is_finite() {
        return Err(Error::Domain {
            context: "bessel_k_imag_order",
            message: format!("non-finite result for nu = {nu}, x = {x}"),
        });
    }
    Ok(r.value)
}

// Lanczos approximation, g = 607/128, 15 coefficients.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_C: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// ln Gamma(z) for Re z >= 0.5 (principal branch).
pub(crate) fn complex_ln_gamma(z: Complex64) -> Complex64 {
    debug_assert!(z.re >= 0.5);
    let zm1 = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_C[0], 0.0);
    for (i, &c) in LANCZOS_C.iter().enumerate().skip(1) {
        acc += c / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (zm1 + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma(z) for complex z, Lanczos approximation with reflection for
/// Re z < 0.5. Accurate to better than 1e-13 relative on the strip
/// Re z in [0.5, 2] used by the spectrum formulas.
pub fn complex_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain {
            context: "complex_gamma",
            message: format!("non-finite argument {z}"),
        });
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    let value = if z.re < 0.5 {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = std::f64::consts::PI;
        pi / ((pi * z).sin() * complex_ln_gamma(Complex64::new(1.0, 0.0) - z).exp())
    } else {
        complex_ln_gamma(z).exp()
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Overflow {
            context: "complex_gamma",
            value: z.norm(),
        });
    }
    Ok(value)
}

/// psi(z) for Re z >= 0.5: recurrence into |z| >= 12, then the asymptotic
/// series. Independent of the Lanczos gamma path.
pub(crate) fn digamma_complex(z: Complex64) -> Complex64 {
    debug_assert!(z.re >= 0.5);
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm_sqr() < 144.0 {
        shift += 1.0 / w;
        w += 1.0;
    }
    // psi(w) ~ ln w - 1/(2w) - sum B_{2n} / (2n w^{2n})
    const B: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (w * w);
    let mut acc = w.ln() - 0.5 / w;
    let mut p = inv2;
    for &b in &B {
        acc -= b * p;
        p *= inv2;
    }
    acc - shift
}

/// Re psi(1 + iy) for y >= 0.
pub fn re_digamma_on_line(y: f64) -> Result<f64> {
    if !y.is_finite() || y < 0.0 {
        return Err(Error::Domain {
            context: "re_digamma_on_line",
            message: format!("y must be finite and >= 0, got {y}"),
        });
    }
    Ok(digamma_complex(Complex64::new(1.0, y)).re)
}

/// Harmonic number of imaginary argument: H_{i omega} = gamma + psi(1 + i omega).
pub fn harmonic_imag(omega: f64) -> Result<Complex64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::Domain {
            context: "harmonic_imag",
            message: format!("omega must be finite and >= 0, got {omega}"),
        });
    }
    Ok(digamma_complex(Complex64::new(1.0, omega)) + EULER_GAMMA)
}

/// Hyperbolic cosecant. Underflows to zero for |x| large.
pub fn csch(x: f64) -> f64 {
    1.0 / x.sinh()
}
