use super::Tensor;
use crate::error::Result;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `tanh(filter) * sigmoid(gate)`, elementwise.
pub fn gated_activation(filter_in: &Tensor, gate_in: &Tensor) -> Result<Tensor> {
    filter_in.ensure_same_shape(gate_in, "gated activation")?;
    let mut out = Tensor::zeros(filter_in.shape());
    gate_forward(filter_in.data(), gate_in.data(), out.data_mut());
    Ok(out)
}

/// Gradients of [`gated_activation`] with respect to both inputs.
pub fn gated_activation_backward(
    filter_in: &Tensor,
    gate_in: &Tensor,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor)> {
    filter_in.ensure_same_shape(gate_in, "gated activation")?;
    filter_in.ensure_same_shape(upstream, "gated activation upstream")?;
    let mut g_filter = Tensor::zeros(filter_in.shape());
    let mut g_gate = Tensor::zeros(filter_in.shape());
    gate_backward(
        filter_in.data(),
        gate_in.data(),
        upstream.data(),
        g_filter.data_mut(),
        g_gate.data_mut(),
    );
    Ok((g_filter, g_gate))
}

pub(crate) fn gate_forward(filter: &[f64], gate: &[f64], out: &mut [f64]) {
    for ((o, &f), &g) in out.iter_mut().zip(filter).zip(gate) {
        *o = f.tanh() * sigmoid(g);
    }
}

/// Writes (not accumulates) the input gradients.
pub(crate) fn gate_backward(
    filter: &[f64],
    gate: &[f64],
    upstream: &[f64],
    g_filter: &mut [f64],
    g_gate: &mut [f64],
) {
    for i in 0..filter.len() {
        let th = filter[i].tanh();
        let sg = sigmoid(gate[i]);
        let u = upstream[i];
        g_filter[i] = u * (1.0 - th * th) * sg;
        g_gate[i] = u * th * sg * (1.0 - sg);
    }
}
