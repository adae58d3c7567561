//! Normalized weighted root mean squared logarithmic error (NWRMSLE) and
//! the log-space training loss that shares its minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

pub const PERISHABLE_WEIGHT: f64 = 1.25;
pub const DEFAULT_WEIGHT: f64 = 1.0;

/// One scored (prediction, actual) pair in unit space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub predicted: f64,
    pub actual: f64,
    pub weight: f64,
}

impl EvaluationRow {
    pub fn new(predicted: f64, actual: f64, weight: f64) -> Self {
        Self {
            predicted,
            actual,
            weight,
        }
    }
}

pub fn perishable_weight(is_perishable: bool) -> f64 {
    if is_perishable {
        PERISHABLE_WEIGHT
    } else {
        DEFAULT_WEIGHT
    }
}

/// `ln(max(x, 0) + 1)`.
#[inline]
pub fn log1p_clipped(x: f64) -> f64 {
    x.max(0.0).ln_1p()
}

/// `sqrt(sum w (ln(p+1) - ln(a+1))^2 / sum w)`. Negative predictions and
/// actuals are clipped to zero first.
pub fn nwrmsle(rows: &[EvaluationRow]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::invalid("nwrmsle needs at least one row"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for r in rows {
        if !r.weight.is_finite() || r.weight <= 0.0 {
            return Err(Error::invalid(format!("row weight must be > 0, got {}", r.weight)));
        }
        if !r.predicted.is_finite() || !r.actual.is_finite() {
            return Err(Error::invalid("non-finite sales value"));
        }
        let d = log1p_clipped(r.predicted) - log1p_clipped(r.actual);
        num += r.weight * d * d;
        den += r.weight;
    }
    Ok((num / den).sqrt())
}

/// Weighted squared error in log space: `sum w (p - t)^2 / sum w`, with its
/// gradient `2 w (p - t) / sum w` with respect to `pred_log`.
pub fn weighted_log_mse(
    pred_log: &Tensor,
    target_log: &Tensor,
    weights: &Tensor,
) -> Result<(f64, Tensor)> {
    pred_log.ensure_same_shape(target_log, "weighted_log_mse targets")?;
    pred_log.ensure_same_shape(weights, "weighted_log_mse weights")?;
    let w = weights.data();
    if w.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::invalid("loss weights must be > 0"));
    }
    let total: f64 = w.iter().sum();
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred_log.shape());
    for (i, g) in grad.data_mut().iter_mut().enumerate() {
        let d = pred_log.data()[i] - target_log.data()[i];
        loss += w[i] * d * d;
        *g = 2.0 * w[i] * d / total;
    }
    Ok((loss / total, grad))
}
