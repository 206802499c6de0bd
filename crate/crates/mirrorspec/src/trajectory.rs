//! Mirror worldlines in lab and null coordinates: the asymptotically
//! static sinh mirror and the Schwarzschild mirror it is built from.

use crate::error::{Error, Result};

/// Largest |2 kappa x| fed to sinh/exp; beyond this the phases handed to
/// downstream quadrature would not be finite.
const ARG_LIMIT: f64 = 700.0;

/// Physical scales of the worldline: kappa sets the temperature
/// (T = kappa / 2 pi), g the staticity scale. Near-thermal emission needs
/// g >> kappa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorParams {
    kappa: f64,
    g: f64,
}

/// g / kappa above which the closed-form spectrum is treated as valid.
pub const THERMAL_REGIME_RATIO: f64 = 100.0;

impl MirrorParams {
    pub fn new(kappa: f64, g: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && g > 0.0 && g.is_finite()) {
            return Err(Error::Domain {
                context: "MirrorParams",
                message: format!("kappa and g must be positive and finite, got kappa = {kappa}, g = {g}"),
            });
        }
        if !(g / kappa).is_finite() {
            return Err(Error::Domain {
                context: "MirrorParams",
                message: format!("g/kappa = {} is not finite", g / kappa),
            });
        }
        Ok(MirrorParams { kappa, g })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Equilibrium temperature of the late-time Planck factor.
    pub fn temperature(&self) -> f64 {
        self.kappa / (2.0 * std::f64::consts::PI)
    }

    /// Whether g/kappa is large enough for the leading-order spectrum.
    pub fn is_thermal_regime(&self) -> bool {
        self.g / self.kappa >= THERMAL_REGIME_RATIO
    }
}

/// One sample of the worldline. `v = t + x` holds bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldlinePoint {
    pub x: f64,
    pub t: f64,
    pub v: f64,
    pub velocity: f64,
}

fn checked_2kx(x: f64, kappa: f64, context: &'static str) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain {
            context,
            message: format!("x must be finite, got {x}"),
        });
    }
    let u = 2.0 * kappa * x;
    if u.abs() > ARG_LIMIT {
        return Err(Error::Overflow { context, value: u });
    }
    Ok(u)
}

/// Advanced null time of the sinh mirror: v(x) = -sinh(2 kappa x) / g.
pub fn sinh_advanced_time(x: f64, p: &MirrorParams) -> Result<f64> {
    let u = checked_2kx(x, p.kappa, "sinh_advanced_time")?;
    Ok(-u.sinh() / p.g)
}

/// Coordinate time along the worldline: t(x) = v(x) - x, strictly
/// decreasing in x.
pub fn sinh_coordinate_time(x: f64, p: &MirrorParams) -> Result<f64> {
    Ok(sinh_advanced_time(x, p)? - x)
}

/// Lab-frame velocity dx/dt = -1 / (1 + (2 kappa / g) cosh(2 kappa x)).
///
/// Always in (-1, 0): the worldline is time-like and asymptotically static,
/// fastest at x = 0 where |dx/dt| = 1 / (1 + 2 kappa / g).
pub fn sinh_velocity(x: f64, p: &MirrorParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain {
            context: "sinh_velocity",
            message: format!("x must be finite, got {x}"),
        });
    }
    let u = 2.0 * p.kappa * x;
    // cosh overflows to +inf for huge |u|; the velocity then underflows to
    // -0 which is the correct static limit, so no overflow error here.
    Ok(-1.0 / (1.0 + (2.0 * p.kappa / p.g) * u.cosh()))
}

/// Advanced null time of the Schwarzschild mirror: v(x) = -exp(2 kappa x) / kappa.
pub fn schwarzschild_advanced_time(x: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain {
            context: "schwarzschild_advanced_time",
            message: format!("kappa must be positive and finite, got {kappa}"),
        });
    }
    let u = checked_2kx(x, kappa, "schwarzschild_advanced_time")?;
    Ok(-u.exp() / kappa)
}

/// Sample the sinh worldline on a finite, sorted grid.
pub fn worldline_sample(x_grid: &[f64], p: &MirrorParams) -> Result<Vec<WorldlinePoint>> {
    if x_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Domain {
            context: "worldline_sample",
            message: "x grid must be sorted ascending".into(),
        });
    }
    x_grid
        .iter()
        .map(|&x| {
            let v0 = sinh_advanced_time(x, p)?;
            let t = v0 - x;
            // re-derive v from t so that v = t + x holds bit-exactly
            let v = t + x;
            Ok(WorldlinePoint {
                x,
                t,
                v,
                velocity: sinh_velocity(x, p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn params(kappa: f64, g: f64) -> MirrorParams {
        MirrorParams::new(kappa, g).unwrap()
    }

    #[test]
    fn advanced_time_anchors() {
        let p = params(1.0, 1.0);
        assert_eq!(sinh_advanced_time(0.0, &p).unwrap(), 0.0);
        // -sinh(2) cross-checked against (e^2 - e^-2)/2
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert_relative_eq!(
            sinh_advanced_time(1.0, &p).unwrap(),
            -(e2 - 1.0 / e2) / 2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(sinh_advanced_time(1.0, &p).unwrap(), -3.626860407847019, max_relative = 1e-14);
    }

    #[test]
    fn coordinate_time_anchors_and_monotonicity() {
        let p = params(1.0, 1.0);
        assert_eq!(sinh_coordinate_time(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(sinh_coordinate_time(1.0, &p).unwrap(), -4.626860407847019, max_relative = 1e-14);
        let p = params(0.7, 31.0);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let x = -8.0 + 16.0 * i as f64 / 199.0;
            let t = sinh_coordinate_time(x, &p).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn velocity_anchors() {
        let p = params(1.0, 2.0);
        assert_relative_eq!(sinh_velocity(0.0, &p).unwrap(), -0.5, max_relative = 1e-15);
        let p6 = params(1.0, 1e6);
        assert_relative_eq!(
            sinh_velocity(0.0, &p6).unwrap(),
            -1.0 / (1.0 + 2e-6),
            max_relative = 1e-15
        );
        // asymptotic staticity: cosh(2 kappa x) > g 1e6 / (2 kappa)
        let x = ((1e6f64 * 1e6 / 2.0).acosh()) / 2.0 + 1.0;
        assert!(sinh_velocity(x, &p6).unwrap().abs() < 1e-6);
        assert!(sinh_velocity(-x, &p6).unwrap().abs() < 1e-6);
    }

    #[test]
    fn schwarzschild_anchor_and_late_time_ratio() {
        assert_relative_eq!(schwarzschild_advanced_time(0.0, 1.0).unwrap(), -1.0, max_relative = 1e-15);
        assert_relative_eq!(
            schwarzschild_advanced_time(1.0, 1.0).unwrap(),
            -(2.0f64).exp(),
            max_relative = 1e-15
        );
        // sinh mirror approaches the Schwarzschild mirror up to kappa/(2g)
        let kappa = 1.3;
        let g = 57.0;
        let p = params(kappa, g);
        for x in [8.0 / kappa, 10.0 / kappa, 10.0] {
            assert!(2.0 * kappa * x > 15.0);
            let ratio = sinh_advanced_time(x, &p).unwrap() / schwarzschild_advanced_time(x, kappa).unwrap();
            assert_relative_eq!(ratio, kappa / (2.0 * g), max_relative = 1e-6);
        }
    }

    #[test]
    fn overflow_is_reported_not_saturated() {
        let p = params(1.0, 1.0);
        assert!(matches!(
            sinh_advanced_time(400.0, &p),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            schwarzschild_advanced_time(400.0, 1.0),
            Err(Error::Overflow { .. })
        ));
        // velocity stays defined arbitrarily far out
        assert_abs_diff_eq!(sinh_velocity(400.0, &p).unwrap(), 0.0, epsilon = 1e-300);
    }

    #[test]
    fn worldline_sampling_invariants() {
        let p = params(2.0, 11.0);
        let single = worldline_sample(&[0.0], &p).unwrap();
        assert_eq!(single[0].x, 0.0);
        assert_eq!(single[0].t, 0.0);
        assert_eq!(single[0].v, 0.0);
        assert_relative_eq!(single[0].velocity, -1.0 / (1.0 + 4.0 / 11.0), max_relative = 1e-15);

        let grid: Vec<f64> = (0..101).map(|i| -3.0 + 6.0 * i as f64 / 100.0).collect();
        let pts = worldline_sample(&grid, &p).unwrap();
        for pt in &pts {
            assert_eq!(pt.v, pt.t + pt.x, "v = t + x must hold bit-exactly");
            assert!(pt.velocity.abs() < 1.0);
        }
        // grid symmetric about zero: v column antisymmetric
        for (a, b) in pts.iter().zip(pts.iter().rev()) {
            assert_abs_diff_eq!(a.v, -b.v, epsilon = 1e-12 * (1.0 + a.v.abs()));
        }
        assert!(worldline_sample(&[1.0, 0.0], &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(MirrorParams::new(0.0, 1.0).is_err());
        assert!(MirrorParams::new(1.0, -1.0).is_err());
        assert!(MirrorParams::new(f64::NAN, 1.0).is_err());
        assert!(params(1.0, 1e6).is_thermal_regime());
        assert!(!params(1.0, 10.0).is_thermal_regime());
        assert_relative_eq!(params(2.0, 10.0).temperature(), 1.0 / std::f64::consts::PI, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn velocity_is_timelike(x in -300.0f64..300.0, kappa in 1e-3f64..1e3, g in 1e-3f64..1e6) {
            let p = params(kappa, g);
            let v = sinh_velocity(x, &p).unwrap();
            // the speed underflows to -0 in the deep static regime
            prop_assert!(v <= 0.0 && v > -1.0);
        }

        #[test]
        fn speed_decreases_away_from_origin(x in 1e-6f64..100.0, kappa in 0.1f64..10.0, g in 0.1f64..1e4) {
            let p = params(kappa, g);
            let near = sinh_velocity(x * 0.5, &p).unwrap().abs();
            let far = sinh_velocity(x, &p).unwrap().abs();
            prop_assert!(far <= near);
        }

        #[test]
        fn advanced_time_antisymmetric(x in -90.0f64..90.0, kappa in 0.1f64..3.0, g in 0.1f64..1e3) {
            // |2 kappa x| stays below the overflow guard in this range
            let p = params(kappa, g);
            let plus = sinh_advanced_time(x, &p).unwrap();
            let minus = sinh_advanced_time(-x, &p).unwrap();
            prop_assert_eq!(plus, -minus);
        }
    }
}
