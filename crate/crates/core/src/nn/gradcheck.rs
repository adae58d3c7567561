use super::{GradientSet, ParamSet, Tensor};
use crate::error::Result;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Denominator floor for [`relative_error`]; below this magnitude both
/// values are compared on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Central-difference gradient of `loss_fn` at `params`, one coordinate at a
/// time.
pub fn finite_diff_grad<P, F>(params: &P, mut loss_fn: F, eps: f64) -> Result<GradientSet>
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    assert!(eps > 0.0, "finite difference step must be positive");
    let mut probe = params.clone();
    let shapes: Vec<Vec<usize>> = params.tensors().iter().map(|t| t.shape().to_vec()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (ti, shape) in shapes.iter().enumerate() {
        let mut g = Tensor::zeros(shape);
        for j in 0..g.len() {
            let orig = probe.tensors()[ti].data()[j];
            probe.tensors_mut()[ti].data_mut()[j] = orig + eps;
            let up = loss_fn(&probe)?;
            probe.tensors_mut()[ti].data_mut()[j] = orig - eps;
            let down = loss_fn(&probe)?;
            probe.tensors_mut()[ti].data_mut()[j] = orig;
            g.data_mut()[j] = (up - down) / (2.0 * eps);
        }
        out.push(g);
    }
    Ok(GradientSet { tensors: out })
}

/// `|a - b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

pub fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}
