//! Dilated causal 1-D convolution.
//!
//! Output position `t` of channel `c` is
//! `bias[c] + sum_{i,k} w[c,i,k] * x[i, t - (K-1-k)*d]`, with reads before
//! position 0 taken as zero. The last tap (`k = K-1`) is the current step.
//!
//! Two layouts are supported: whole sequences as `Tensor[channels, T]`, and
//! single time steps read out of a time-major history buffer
//! (`hist[t * channels + i]`) for incremental decoding. Both accumulate in the
//! same order, so they agree bit for bit.

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    /// `[out_channels, in_channels, kernel_size]`
    pub weights: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
    pub dilation: usize,
}

/// Gradients for one convolution's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrad {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl ConvParams {
    pub fn new(weights: Tensor, bias: Tensor, dilation: usize) -> Result<Self> {
        if weights.rank() != 3 {
            return Err(Error::invalid(format!(
                "conv weights must be rank 3, got shape {:?}",
                weights.shape()
            )));
        }
        if bias.shape() != [weights.dim(0)] {
            return Err(Error::invalid(format!(
                "conv bias shape {:?} does not match {} output channels",
                bias.shape(),
                weights.dim(0)
            )));
        }
        if dilation == 0 {
            return Err(Error::invalid("dilation must be >= 1"));
        }
        Ok(Self {
            weights,
            bias,
            dilation,
        })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kernel: usize, dilation: usize) -> Self {
        Self {
            weights: Tensor::zeros(&[out_ch, in_ch, kernel]),
            bias: Tensor::zeros(&[out_ch]),
            dilation,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weights.dim(0)
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dim(1)
    }

    pub fn kernel_size(&self) -> usize {
        self.weights.dim(2)
    }

    /// Number of past steps one output can see, including the current one.
    pub fn receptive_field(&self) -> usize {
        (self.kernel_size() - 1) * self.dilation + 1
    }

    fn shift(&self, k: usize) -> usize {
        (self.kernel_size() - 1 - k) * self.dilation
    }

    pub fn zero_grad(&self) -> ConvGrad {
        ConvGrad {
            weights: Tensor::zeros(self.weights.shape()),
            bias: Tensor::zeros(self.bias.shape()),
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.rank() != 2 || input.dim(0) != self.in_channels() {
            return Err(Error::invalid(format!(
                "conv input shape {:?} does not match {} input channels",
                input.shape(),
                self.in_channels()
            )));
        }
        Ok(())
    }

    /// First tap whose input lies at or after step 0 when computing step `t`.
    fn first_tap(&self, t: usize) -> usize {
        (self.kernel_size() - 1).saturating_sub(t / self.dilation)
    }

    /// Output column at step `t`, reading from a time-major history holding
    /// at least `t + 1` steps.
    pub fn forward_at(&self, hist: &[f64], t: usize, out: &mut [f64]) {
        let (n_in, n_k) = (self.in_channels(), self.kernel_size());
        let k0 = self.first_tap(t);
        let cols: Vec<&[f64]> = (0..n_k)
            .map(|k| if k < k0 { &[][..] } else { &hist[(t - self.shift(k)) * n_in..][..n_in] })
            .collect();
        let w = self.weights.data();
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = self.bias.data()[c];
            for (i, wi) in w[c * n_in * n_k..(c + 1) * n_in * n_k].chunks_exact(n_k).enumerate() {
                for k in k0..n_k {
                    acc += wi[k] * cols[k][i];
                }
            }
            *o = acc;
        }
    }

    /// Reverse of `forward_at`: accumulates into `grad_hist` and `grad`.
    pub fn backward_at(
        &self,
        hist: &[f64],
        t: usize,
        upstream: &[f64],
        grad_hist: &mut [f64],
        grad: &mut ConvGrad,
    ) {
        let (n_in, n_k) = (self.in_channels(), self.kernel_size());
        let k0 = self.first_tap(t);
        let w = self.weights.data();
        let gw = grad.weights.data_mut();
        let gb = grad.bias.data_mut();
        for (c, &g) in upstream.iter().enumerate() {
            gb[c] += g;
            if g == 0.0 {
                continue;
            }
            let base = c * n_in * n_k;
            for k in k0..n_k {
                let pos = (t - self.shift(k)) * n_in;
                let col = &hist[pos..pos + n_in];
                let g_col = &mut grad_hist[pos..pos + n_in];
                for i in 0..n_in {
                    let idx = base + i * n_k + k;
                    gw[idx] += g * col[i];
                    g_col[i] += g * w[idx];
                }
            }
        }
    }
}

/// Causal dilated convolution over a whole sequence: `[in_ch, T] -> [out_ch, T]`.
pub fn causal_conv1d(input: &Tensor, params: &ConvParams) -> Result<Tensor> {
    params.check_input(input)?;
    let (n_in, n_k) = (params.in_channels(), params.kernel_size());
    let n_out = params.out_channels();
    let len = input.dim(1);
    let x = input.data();
    let w = params.weights.data();
    let mut out = Tensor::zeros(&[n_out, len]);
    let y = out.data_mut();
    for c in 0..n_out {
        let y_row = &mut y[c * len..(c + 1) * len];
        y_row.fill(params.bias.data()[c]);
        for i in 0..n_in {
            let x_row = &x[i * len..(i + 1) * len];
            for k in 0..n_k {
                let shift = params.shift(k);
                if shift >= len {
                    continue;
                }
                let wv = w[(c * n_in + i) * n_k + k];
                for (yt, xt) in y_row[shift..].iter_mut().zip(&x_row[..len - shift]) {
                    *yt += wv * xt;
                }
            }
        }
    }
    Ok(out)
}

/// Exact reverse-mode gradients of [`causal_conv1d`].
pub fn causal_conv1d_backward(
    input: &Tensor,
    params: &ConvParams,
    upstream: &Tensor,
) -> Result<(Tensor, ConvGrad)> {
    params.check_input(input)?;
    let len = input.dim(1);
    if upstream.shape() != [params.out_channels(), len] {
        return Err(Error::invalid(format!(
            "upstream gradient shape {:?} does not match conv output [{}, {len}]",
            upstream.shape(),
            params.out_channels()
        )));
    }
    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad = params.zero_grad();
    accumulate_conv1d_backward(input, params, upstream, &mut grad_input, &mut grad);
    Ok((grad_input, grad))
}

/// Accumulating form of [`causal_conv1d_backward`]; shapes are the caller's
/// responsibility.
pub(crate) fn accumulate_conv1d_backward(
    input: &Tensor,
    params: &ConvParams,
    upstream: &Tensor,
    grad_input: &mut Tensor,
    grad: &mut ConvGrad,
) {
    let (n_in, n_k) = (params.in_channels(), params.kernel_size());
    let n_out = params.out_channels();
    let len = input.dim(1);
    let x = input.data();
    let gy = upstream.data();
    let w = params.weights.data();
    let gx = grad_input.data_mut();
    let gw = grad.weights.data_mut();
    let gb = grad.bias.data_mut();
    for c in 0..n_out {
        let gy_row = &gy[c * len..(c + 1) * len];
        gb[c] += gy_row.iter().sum::<f64>();
        for i in 0..n_in {
            let x_row = &x[i * len..(i + 1) * len];
            for k in 0..n_k {
                let shift = params.shift(k);
                if shift >= len {
                    continue;
                }
                let idx = (c * n_in + i) * n_k + k;
                let wv = w[idx];
                let mut acc = 0.0;
                let gx_row = &mut gx[i * len..(i + 1) * len - shift];
                for ((g, xt), gxt) in gy_row[shift..]
                    .iter()
                    .zip(&x_row[..len - shift])
                    .zip(gx_row.iter_mut())
                {
                    acc += g * xt;
                    *gxt += wv * g;
                }
                gw[idx] += acc;
            }
        }
    }
}

/// Convolution evaluated on a subsampled grid: for `out_len` columns,
/// `y[c, q] = b[c] + sum_{i,k} w[c, i, k] * x[i, stride * q + k]`.
///
/// When `x` holds every `d`-th step of a sequence, this is the dilation-`d`
/// causal convolution evaluated only at every `stride`-th of those steps,
/// with terms accumulated in the same order as [`causal_conv1d`].
pub(crate) fn strided_conv1d(input: &Tensor, params: &ConvParams, stride: usize, out_len: usize) -> Tensor {
    let (n_in, n_k) = (params.in_channels(), params.kernel_size());
    let n_out = params.out_channels();
    let len = input.dim(1);
    debug_assert!(out_len == 0 || stride * (out_len - 1) + n_k <= len);
    let x = input.data();
    let w = params.weights.data();
    let mut out = Tensor::zeros(&[n_out, out_len]);
    let y = out.data_mut();
    for c in 0..n_out {
        let y_row = &mut y[c * out_len..(c + 1) * out_len];
        y_row.fill(params.bias.data()[c]);
        for i in 0..n_in {
            let x_row = &x[i * len..(i + 1) * len];
            for k in 0..n_k {
                let wv = w[(c * n_in + i) * n_k + k];
                for (q, yq) in y_row.iter_mut().enumerate() {
                    *yq += wv * x_row[stride * q + k];
                }
            }
        }
    }
    out
}

/// Reverse of [`strided_conv1d`], accumulating into `grad_input` and `grad`.
pub(crate) fn accumulate_strided_conv1d_backward(
    input: &Tensor,
    params: &ConvParams,
    stride: usize,
    upstream: &Tensor,
    grad_input: &mut Tensor,
    grad: &mut ConvGrad,
) {
    let (n_in, n_k) = (params.in_channels(), params.kernel_size());
    let n_out = params.out_channels();
    let len = input.dim(1);
    let out_len = upstream.dim(1);
    let x = input.data();
    let gy = upstream.data();
    let w = params.weights.data();
    let gx = grad_input.data_mut();
    let gw = grad.weights.data_mut();
    let gb = grad.bias.data_mut();
    for c in 0..n_out {
        let gy_row = &gy[c * out_len..(c + 1) * out_len];
        gb[c] += gy_row.iter().sum::<f64>();
        for i in 0..n_in {
            let x_row = &x[i * len..(i + 1) * len];
            let gx_row = &mut gx[i * len..(i + 1) * len];
            for k in 0..n_k {
                let idx = (c * n_in + i) * n_k + k;
                let wv = w[idx];
                let mut acc = 0.0;
                for (q, &g) in gy_row.iter().enumerate() {
                    acc += g * x_row[stride * q + k];
                    gx_row[stride * q + k] += wv * g;
                }
                gw[idx] += acc;
            }
        }
    }
}

impl ConvGrad {
    pub fn add_assign(&mut self, other: &ConvGrad) {
        self.weights.add_scaled(&other.weights, 1.0);
        self.bias.add_scaled(&other.bias, 1.0);
    }
}

impl ParamSet for ConvParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.weights, &self.bias]
    }
    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weights, &mut self.bias]
    }
    fn names(&self) -> Vec<String> {
        vec!["weight".into(), "bias".into()]
    }
}
