//! Integrated bias and root-n scaled RMSE over the time grid.

use crate::error::{Error, Result};

/// Returns `(bias, rmse)` where
/// `bias = (1/tau) sum_t |mean_i psi_i(t) - psi(t)|` and
/// `rmse = (sqrt(n)/tau) sum_t sqrt(mean_i (psi_i(t) - psi(t))^2)`.
pub fn bias_rmse(estimates: &[Vec<f64>], truth: &[f64], n: usize) -> Result<(f64, f64)> {
    if estimates.is_empty() {
        return Err(Error::Shape(
            "bias_rmse needs at least one replicate".into(),
        ));
    }
    let tau = truth.len();
    if tau == 0 {
        return Err(Error::InvalidTau);
    }
    if let Some(bad) = estimates.iter().find(|e| e.len() != tau) {
        return Err(Error::Shape(format!(
            "replicate curve has {} points, truth has {tau}",
            bad.len()
        )));
    }
    let reps = estimates.len() as f64;
    let mut bias = 0.0;
    let mut rmse = 0.0;
    for (t, &truth_t) in truth.iter().enumerate() {
        let mean = estimates.iter().map(|e| e[t]).sum::<f64>() / reps;
        let mse = estimates
            .iter()
            .map(|e| (e[t] - truth_t).powi(2))
            .sum::<f64>()
            / reps;
        bias += (mean - truth_t).abs();
        rmse += mse.sqrt();
    }
    Ok((bias / tau as f64, (n as f64).sqrt() * rmse / tau as f64))
}

/// Pointwise mean of replicate curves.
pub fn mean_curve(estimates: &[Vec<f64>], tau: usize) -> Vec<f64> {
    let reps = estimates.len() as f64;
    (0..tau)
        .map(|t| estimates.iter().map(|e| e[t]).sum::<f64>() / reps)
        .collect()
}
