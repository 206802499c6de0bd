//! Beta Bogoliubov coefficient of the sinh mirror: closed form, an
//! independent regularized quadrature of the defining integral, and the
//! modulus squared that feeds the particle spectrum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, neville_to_zero, QuadratureConfig};
use crate::specfun::{bessel_k_imag_order, ImagOrderBesselArgs};
use crate::trajectory::MirrorParams;

use std::f64::consts::PI;

/// A (detected, incoming) frequency pair with its derived sum and
/// difference frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPair {
    omega: f64,
    omega_prime: f64,
    omega_p: f64,
    omega_n: f64,
}

impl FrequencyPair {
    pub fn new(omega: f64, omega_prime: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite() && omega_prime > 0.0 && omega_prime.is_finite()) {
            return Err(Error::Domain {
                context: "FrequencyPair",
                message: format!(
                    "frequencies must be positive and finite, got omega = {omega}, omega' = {omega_prime}"
                ),
            });
        }
        Ok(FrequencyPair {
            omega,
            omega_prime,
            omega_p: omega + omega_prime,
            omega_n: omega - omega_prime,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_prime(&self) -> f64 {
        self.omega_prime
    }

    /// Sum frequency omega + omega'.
    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    /// Difference frequency omega - omega'.
    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }
}

/// Closed-form beta coefficient,
/// `beta = -(sqrt(omega omega') / (pi kappa omega_p)) e^{-pi omega / 2 kappa}
///  K_{i omega/kappa}(omega_p / g)`.
///
/// Real for this worldline; negative wherever K is positive.
pub fn beta_closed(fp: &FrequencyPair, p: &MirrorParams, cfg: &QuadratureConfig) -> Result<Complex64> {
    let nu = fp.omega / p.kappa();
    let x = fp.omega_p / p.g();
    let k = bessel_k_imag_order(ImagOrderBesselArgs::new(nu, x)?, cfg)?;
    let value = -(fp.omega * fp.omega_prime).sqrt() / (PI * p.kappa() * fp.omega_p)
        * (-PI * fp.omega / (2.0 * p.kappa())).exp()
        * k;
    Ok(Complex64::new(value, 0.0))
}

/// |beta|^2 = omega omega' / (pi^2 kappa^2 omega_p^2) e^{-pi omega/kappa}
/// K_{i omega/kappa}(omega_p / g)^2.
pub fn beta_abs2(fp: &FrequencyPair, p: &MirrorParams, cfg: &QuadratureConfig) -> Result<f64> {
    let nu = fp.omega / p.kappa();
    let x = fp.omega_p / p.g();
    let k = bessel_k_imag_order(ImagOrderBesselArgs::new(nu, x)?, cfg)?;
    Ok(fp.omega * fp.omega_prime / (PI * p.kappa() * fp.omega_p).powi(2)
        * (-PI * fp.omega / p.kappa()).exp()
        * k
        * k)
}

/// Solve a u + b sinh(u) = target on [lo, hi] (the phase is strictly
/// increasing). Newton iteration with a bisection guard.
fn solve_phase(a: f64, b: f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = |u: f64| a * u + b * u.sinh();
    let mut u = 0.5 * (lo + hi);
    for _ in 0..80 {
        let f = phi(u) - target;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let df = a + b * u.cosh();
        let step = f / df;
        let next = u - step;
        if next > lo && next < hi {
            u = next;
        } else {
            u = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 1e-14 * (1.0 + u.abs()) || step.abs() <= 1e-14 * (1.0 + u.abs()) {
            break;
        }
    }
    u
}

/// Direct evaluation of the defining Bogoliubov integral
/// `beta = (-1/(4 pi sqrt(omega omega'))) int_{+inf}^{-inf} dx
///  e^{2 i omega x - i omega_p v(x)} (omega_n v'(x) - 2 omega)`
/// for the sinh worldline, with the printed descending orientation.
///
/// After substituting u = 2 kappa x the integrand oscillates with phase
/// a u + b sinh u; the integral exists only as a distributional limit. It
/// is evaluated under a damping window e^{-eps cosh u} on [-u_cut, u_cut]
/// and extrapolated eps -> 0 over `cfg.damping_eps_sequence` (relative to
/// the natural scale b = omega_p / g) by polynomial extrapolation. The
/// extrapolation must stabilize to `cfg.rel_tol` or the evaluation reports
/// `NonConvergence`.
pub fn beta_numeric(fp: &FrequencyPair, p: &MirrorParams, cfg: &QuadratureConfig) -> Result<Complex64> {
    cfg.validate()?;
    let a = fp.omega / p.kappa();
    let b = fp.omega_p / p.g();
    let c = fp.omega_n / p.g();
    let prefactor = 1.0 / (4.0 * PI * (fp.omega * fp.omega_prime).sqrt());

    let inner_rel = (cfg.rel_tol * 1e-3).max(1e-13);
    let inner_abs = (cfg.abs_tol * 1e-2).max(1e-280);

    let mut eps_grid = Vec::with_capacity(cfg.damping_eps_sequence.len());
    let mut re_vals = Vec::with_capacity(cfg.damping_eps_sequence.len());
    let mut im_vals = Vec::with_capacity(cfg.damping_eps_sequence.len());

    for &factor in &cfg.damping_eps_sequence {
        let eps = factor * b;
        // cutoff where the damped envelope, including the polynomial
        // amplitude, is certifiably below abs_tol * 1e-2
        let l0 = (1e2 / cfg.abs_tol).ln();
        let u1 = (l0 / eps).max(2.0).acosh();
        let amp = a + c.abs() * u1.cosh();
        let l1 = ((1.0 + amp) * 1e2 / cfg.abs_tol).ln();
        let u_cut = (l1 / eps).max(2.0).acosh();
        if u_cut > cfg.u_max {
            return Err(Error::NonConvergence {
                context: "beta_numeric: u_max truncates the damped integrand before its tail is negligible",
                achieved: u_cut,
                required: cfg.u_max,
            });
        }

        let phi = |u: f64| a * u + b * u.sinh();
        let phase_lo = phi(-u_cut);
        let phase_hi = phi(u_cut);
        let n_panels = ((phase_hi - phase_lo) / (4.0 * PI)).ceil().max(8.0);
        if n_panels > 1e6 {
            return Err(Error::NonConvergence {
                context: "beta_numeric: damping sequence demands too many oscillation panels",
                achieved: n_panels,
                required: 1e6,
            });
        }
        let n_panels = n_panels as usize;
        let mut partition = Vec::with_capacity(n_panels + 2);
        partition.push(-u_cut);
        let mut lo = -u_cut;
        for k in 1..n_panels {
            let target = phase_lo + (phase_hi - phase_lo) * k as f64 / n_panels as f64;
            let u = solve_phase(a, b, target, lo, u_cut);
            if u > lo {
                partition.push(u);
                lo = u;
            }
        }
        partition.push(u_cut);

        let damped = move |u: f64| (-eps * u.cosh()).exp() * (-(c * u.cosh() + a));
        let f_re = |u: f64| damped(u) * phi(u).cos();
        let f_im = |u: f64| damped(u) * phi(u).sin();

        let re = integrate_adaptive(&f_re, &partition, inner_abs, inner_rel, cfg.max_refinements)?;
        let im_target_abs = inner_abs.max(inner_rel * re.value.abs());
        let im = integrate_adaptive(&f_im, &partition, im_target_abs, inner_rel, cfg.max_refinements)?;

        eps_grid.push(eps);
        re_vals.push(re.value * prefactor);
        im_vals.push(im.value * prefactor);
    }

    let re_diag = neville_to_zero(&eps_grid, &re_vals);
    let im_diag = neville_to_zero(&eps_grid, &im_vals);
    let n = re_diag.len();
    let last = Complex64::new(re_diag[n - 1], im_diag[n - 1]);
    let prev = Complex64::new(re_diag[n - 2], im_diag[n - 2]);
    let drift = (last - prev).norm();
    let allowed = cfg.abs_tol.max(cfg.rel_tol * last.norm());
    if drift > allowed {
        return Err(Error::NonConvergence {
            context: "beta_numeric: damping extrapolation did not stabilize",
            achieved: drift,
            required: allowed,
        });
    }
    Ok(last)
}
