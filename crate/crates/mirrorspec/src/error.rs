//! Error types shared by the numerical modules.

use thiserror::Error;

/// Errors produced by the numeric layers (special functions, quadrature,
/// Bogoliubov coefficients, spectra).
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error in {context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    /// Gamma function evaluated at a non-positive integer.
    #[error("gamma pole at z = {re}{im:+}i")]
    Pole { re: f64, im: f64 },

    /// A quadrature or extrapolation failed to reach the requested tolerance.
    #[error("{context}: needed {required:.3e}, achieved {achieved:.3e}")]
    NonConvergence {
        context: &'static str,
        achieved: f64,
        required: f64,
    },

    /// An intermediate quantity would exceed the floating-point range.
    #[error("overflow in {context}: |{value:.6e}| exceeds safe range")]
    Overflow { context: &'static str, value: f64 },

    /// The analytic remainder bound of a truncated integral could not be
    /// pushed below the requested tolerance.
    #[error("tail bound {bound:.3e} exceeds tolerance {tolerance:.3e} in {context}")]
    TailBoundExceeded {
        context: &'static str,
        bound: f64,
        tolerance: f64,
    },

    /// The graybody factor lost all significant digits at small frequency.
    #[error("catastrophic cancellation evaluating the graybody factor at omega = {omega:.6e}")]
    Cancellation { omega: f64 },

    /// The closed-form spectrum produced a negative value, outside its
    /// domain of validity. Recorded rather than clamped.
    #[error("closed-form validity breach: graybody = {gray:.6e} < 0 at omega = {omega:.6e}")]
    ClosedFormBreach { omega: f64, gray: f64 },

    /// A spectrum series does not expose enough of the exponential tail
    /// for a thermal fit.
    #[error("insufficient tail for thermal fit: {0}")]
    InsufficientTail(String),
}

pub type Result<T> = std::result::Result<T, Error>;
