//! Adaptive Gauss-Kronrod quadrature and the shared numerical controls.

use crate::error::{Error, Result};

/// Tolerances, refinement budget and regularization controls shared by all
/// numerical integrals in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance target.
    pub rel_tol: f64,
    /// Absolute tolerance target.
    pub abs_tol: f64,
    /// Maximum number of interval bisections per integral.
    pub max_refinements: usize,
    /// Damping factors for the regularized Bogoliubov integral, expressed
    /// relative to the natural scale omega_p / g. Strictly decreasing
    /// toward zero.
    pub damping_eps_sequence: Vec<f64>,
    /// Hard cap on the phase variable u = 2 kappa x.
    pub u_max: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            max_refinements: 4000,
            damping_eps_sequence: vec![1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3],
            u_max: 30.0,
        }
    }
}

impl QuadratureConfig {
    /// A tighter configuration for oracle-grade evaluations.
    pub fn strict() -> Self {
        QuadratureConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_refinements: 20_000,
            ..QuadratureConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Domain {
            context: "QuadratureConfig",
            message,
        };
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(bad(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(bad(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.max_refinements == 0 {
            return Err(bad("max_refinements must be at least 1".into()));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(bad(format!("u_max must be positive, got {}", self.u_max)));
        }
        if self.damping_eps_sequence.len() < 2 {
            return Err(bad("damping_eps_sequence needs at least two entries".into()));
        }
        for pair in self.damping_eps_sequence.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(bad("damping_eps_sequence must be strictly decreasing".into()));
            }
        }
        if self.damping_eps_sequence.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(bad("damping epsilons must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Value and certified error estimate of a quadrature, plus the integral
/// of |f| (the scale against which roundoff is measured).
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub est_error: f64,
    pub resabs: f64,
}

// 15-point Gauss-Kronrod nodes and weights (QUADPACK).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// One 15-point Gauss-Kronrod panel. Returns (integral, error, resabs).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for (j, &wg) in WG.iter().enumerate().take(3) {
        let jtw = j * 2 + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += wg * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    res_gauss += WG[3] * f_center;

    for j in 0..4 {
        let jtw = j * 2;
        if jtw == 7 {
            continue;
        }
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = ((res_kronrod - res_gauss) * half).abs();
    let res_kronrod = res_kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    // QUADPACK-style rescaling of the raw error estimate.
    let mut scaled_err = err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        scaled_err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled_err = scaled_err.max(50.0 * f64::EPSILON * res_abs);
    }

    (res_kronrod, scaled_err, res_abs)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

/// Kahan-Neumaier compensated sum.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Globally adaptive Gauss-Kronrod integration over an initial partition.
///
/// Bisects the worst panel until the summed error estimate satisfies
/// `err <= max(abs_tol, rel_tol * |value|)`, the error reaches the
/// roundoff floor of the integrand scale, or the refinement budget is
/// exhausted. Intervals narrower than a relative width floor are frozen so
/// roundoff-limited panels cannot consume the budget.
pub(crate) fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    partition: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_refinements: usize,
) -> Result<QuadResult> {
    assert!(partition.len() >= 2, "partition needs at least two points");

    let mut active: Vec<Panel> = Vec::with_capacity(partition.len() + 64);
    let mut frozen: Vec<Panel> = Vec::new();
    for w in partition.windows(2) {
        let (value, error, resabs) = qk15(f, w[0], w[1]);
        active.push(Panel { a: w[0], b: w[1], value, error, resabs });
    }

    let span = (partition[partition.len() - 1] - partition[0]).abs();
    let width_floor = span * f64::EPSILON * 64.0;

    let total = |active: &[Panel], frozen: &[Panel]| -> (f64, f64, f64) {
        let value = neumaier_sum(active.iter().chain(frozen.iter()).map(|p| p.value));
        let error = active.iter().chain(frozen.iter()).map(|p| p.error).sum();
        let resabs = active.iter().chain(frozen.iter()).map(|p| p.resabs).sum();
        (value, error, resabs)
    };

    let mut refinements = 0usize;
    loop {
        let (value, error, resabs) = total(&active, &frozen);
        let floor = 100.0 * f64::EPSILON * resabs;
        if error <= abs_tol.max(rel_tol * value.abs()).max(floor) {
            return Ok(QuadResult { value, est_error: error, resabs });
        }
        // worst active panel
        let Some(worst) = active
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
        else {
            // everything frozen at the roundoff floor; report honestly
            return Ok(QuadResult { value, est_error: error, resabs });
        };
        if refinements >= max_refinements {
            return Err(Error::NonConvergence {
                context: "adaptive quadrature refinement budget exhausted",
                achieved: error,
                required: abs_tol.max(rel_tol * value.abs()),
            });
        }
        let p = active.swap_remove(worst);
        if (p.b - p.a).abs() <= width_floor.max((p.a.abs() + p.b.abs()) * f64::EPSILON * 8.0) {
            frozen.push(p);
            continue;
        }
        let mid = 0.5 * (p.a + p.b);
        let (v1, e1, r1) = qk15(f, p.a, mid);
        let (v2, e2, r2) = qk15(f, mid, p.b);
        active.push(Panel { a: p.a, b: mid, value: v1, error: e1, resabs: r1 });
        active.push(Panel { a: mid, b: p.b, value: v2, error: e2, resabs: r2 });
        refinements += 1;
    }
}

/// Neville polynomial extrapolation of (x_i, y_i) samples to x = 0.
///
/// Returns the tableau diagonal: entry k is the extrapolant using the first
/// k + 1 samples.
pub(crate) fn neville_to_zero(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut table = ys.to_vec();
    let mut diag = vec![table[0]];
    for k in 1..n {
        for i in 0..(n - k) {
            // P_{i..i+k}(0)
            table[i] = (xs[i + k] * table[i] - xs[i] * table[i + 1]) / (xs[i + k] - xs[i]);
        }
        diag.push(table[0]);
    }
    diag
}
