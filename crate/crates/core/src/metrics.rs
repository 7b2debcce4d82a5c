//! Regression quality metrics.

use thiserror::Error;

/// Magnitude floor in the MAPE denominator.
pub const MAPE_EPSILON: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("y_true has {expected} entries but y_pred has {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("metrics need at least one sample")]
    Empty,
}

/// RMSE, R², MAPE, and max error between truths and predictions. `r_squared`
/// is `None` when `y_true` is constant (the ratio is undefined there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub r_squared: Option<f64>,
    pub mape: f64,
    pub max_error: f64,
}

/// Computes the four metrics:
/// `rmse = sqrt(mean((t−p)²))`, `r² = 1 − Σ(t−p)²/Σ(t−mean(t))²`,
/// `mape = mean(|t−p| / max(|t|, ε))`, `max_error = max|t−p|`.
pub fn compute_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics, MetricsError> {
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    let n = y_true.len() as f64;
    let mean_true = y_true.iter().sum::<f64>() / n;

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut abs_sum = 0.0;
    let mut max_error: f64 = 0.0;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let e = t - p;
        ss_res += e * e;
        ss_tot += (t - mean_true) * (t - mean_true);
        abs_sum += e.abs() / t.abs().max(MAPE_EPSILON);
        max_error = max_error.max(e.abs());
    }

    Ok(Metrics {
        rmse: (ss_res / n).sqrt(),
        r_squared: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        mape: abs_sum / n,
        max_error,
    })
}
