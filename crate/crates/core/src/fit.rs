//! Log-log least-squares fits for empirical decay exponents.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// A fitted power law: samples of (log2 scale, log2 norm) together with the
/// least-squares slope. A decay `norm ~ scale^(-sigma)` appears as
/// `slope = -sigma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// (log2 scale, log2 norm) pairs, in sweep order.
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub trials: usize,
    pub seed: u64,
}

impl DecayFit {
    /// Fitted decay exponent sigma, i.e. `-slope`.
    pub fn sigma(&self) -> f64 {
        -self.slope
    }
}

/// Least-squares line through `(x, y)` pairs.
///
/// Requires at least five samples with nonzero spread in `x`, and finite
/// values throughout (a norm that is numerically zero produces `-inf` on the
/// log scale and is rejected here).
pub fn fit_line(samples: &[(f64, f64)], trials: usize, seed: u64) -> Result<DecayFit> {
    if samples.len() < 5 {
        return Err(LabError::DegenerateFit(format!(
            "need at least 5 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(LabError::DegenerateFit(
            "non-finite sample (norm numerically zero along path?)".into(),
        ));
    }
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|(x, _)| x).sum();
    let sy: f64 = samples.iter().map(|(_, y)| y).sum();
    let sxx: f64 = samples.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = samples.iter().map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(LabError::DegenerateFit("zero spread in scale".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let max_residual = samples
        .iter()
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit { samples: samples.to_vec(), slope, intercept, max_residual, trials, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let samples: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let fit = fit_line(&samples, 1, 0).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
        assert!((fit.sigma() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_and_degenerate_input() {
        assert!(fit_line(&[(0.0, 1.0), (1.0, 2.0)], 1, 0).is_err());
        let flat = vec![(2.0, 1.0); 6];
        assert!(fit_line(&flat, 1, 0).is_err());
        let bad = vec![(0.0, f64::NEG_INFINITY); 6];
        assert!(fit_line(&bad, 1, 0).is_err());
    }
}
