//! Damped least-squares fitting and extraction of derived quantities.

mod extract;
mod init;
mod jacobian;
mod lm;
mod model;

pub use extract::{
    extract_fsr, extract_lifetime, extract_odmr_peaks, extract_peaks, extract_q, extract_q_at, extract_rabi,
    OdmrPeaks, PeakEstimate, RabiEstimate,
};
pub use init::{find_peaks, initial_guess, Peak};
pub use jacobian::numeric_jacobian;
pub use lm::{fit, FitOptions, FitResult, Termination, Weights};
pub use model::{Model, ModelSpec};

/// Fits a built-in model starting from a data-driven initial guess.
pub fn fit_auto<T: crate::scalar::Real>(
    spec: ModelSpec,
    x: &[T],
    y: &[T],
    weights: &Weights<T>,
) -> crate::error::Result<FitResult<T>> {
    let init = initial_guess(spec, x, y)?;
    fit(&spec, x, y, weights, &init, &FitOptions::default())
}
