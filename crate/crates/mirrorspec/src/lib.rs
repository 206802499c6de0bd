//! Particle creation by an asymptotically static thermal moving mirror.
//!
//! The worldline `g v = -sinh(2 kappa x)` interpolates between a static
//! mirror at early and late times and a Schwarzschild-like horizon-forming
//! mirror in between. Quanta reflected off it reach right null infinity
//! with a near-Planck spectrum at temperature `kappa / 2 pi` while the
//! total particle count stays finite.
//!
//! The crate computes, in units c = 1:
//!
//! - the worldline and its kinematics ([`trajectory`]);
//! - the beta Bogoliubov coefficient, both in closed form (a modified
//!   Bessel function of imaginary order) and by regularized quadrature of
//!   its defining integral ([`bogoliubov`]);
//! - the emitted spectrum N_omega by exact quadrature of |beta|^2 and by
//!   the leading-order closed form with its graybody factor, the total
//!   particle count, and thermal-fit diagnostics ([`spectrum`]);
//! - the special-function kernels those formulas need ([`specfun`]).
//!
//! Every closed-form path is paired with an independent numerical oracle;
//! `mirrorspec --mode self-check --g 10` runs the cross-checks from the
//! command line. See the `examples/` directory for one runnable program
//! per capability.

pub mod bogoliubov;
pub mod cli;
pub mod error;
pub mod quadrature;
pub mod specfun;
pub mod spectrum;
pub mod trajectory;

pub use bogoliubov::{beta_abs2, beta_closed, beta_numeric, FrequencyPair};
pub use error::{Error, Result};
pub use quadrature::QuadratureConfig;
pub use specfun::{
    bessel_k_imag_order, complex_gamma, csch, harmonic_imag, re_digamma_on_line,
    ImagOrderBesselArgs, EULER_GAMMA,
};
pub use spectrum::{
    graybody, spectrum_closed, spectrum_exact, sweep_closed, sweep_exact, thermal_fit,
    total_count, GraybodyParts, Method, SpectrumSample, SpectrumSeries, ThermalFit, TotalCount,
};
pub use trajectory::{
    schwarzschild_advanced_time, sinh_advanced_time, sinh_coordinate_time, sinh_velocity,
    worldline_sample, MirrorParams, WorldlinePoint,
};

/// Version string embedded in CSV headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
