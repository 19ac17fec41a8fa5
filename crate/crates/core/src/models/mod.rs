//! Reference diffusion models and their closed-form information matrices.

pub mod cir;
pub mod fisher;
pub mod vasicek;

pub use cir::Cir;
pub use vasicek::Vasicek;

use crate::error::{Error, Result};
use crate::model::DiffusionModel;

/// Looks a model up by its string identifier.
pub fn by_id(id: &str) -> Result<Box<dyn DiffusionModel>> {
    match id {
        "vasicek" => Ok(Box::new(Vasicek)),
        "cir" => Ok(Box::new(Cir)),
        other => Err(Error::Config(format!(
            "unknown model '{other}' (available: vasicek, cir)"
        ))),
    }
}

/// Sample mean, variance (denominator n) and lag-1 autocorrelation of a path;
/// shared by the moment-matching initializers.
pub(crate) fn path_moments(observations: &[f64]) -> (f64, f64, f64) {
    let n = observations.len() as f64;
    let mean = observations.iter().sum::<f64>() / n;
    let var = observations.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mut cov = 0.0;
    for w in observations.windows(2) {
        cov += (w[0] - mean) * (w[1] - mean);
    }
    cov /= n - 1.0;
    let rho = if var > 0.0 { cov / var } else { 0.0 };
    (mean, var, rho)
}

/// Mean-reversion speed from the lag-1 autocorrelation `rho ~ exp(-kappa
/// delta)`, clamped away from the degenerate cases.
pub(crate) fn reversion_from_autocorr(rho: f64, delta: f64) -> f64 {
    (-rho.clamp(1e-3, 0.999_999).ln() / delta).clamp(1e-4, 50.0)
}

/// The alpha box used by the optimizers: observed data range widened 5x.
pub(crate) fn widened_range(observations: &[f64], factor: f64) -> (f64, f64) {
    let lo = observations.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = observations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo).max(1e-8) * factor;
    (center - half, center + half)
}
