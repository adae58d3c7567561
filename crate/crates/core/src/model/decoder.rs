//! Step-wise decoder for a single window.
//!
//! Each layer keeps a time-major history of its inputs so step `t` can read
//! the dilated taps at `t - d`. The backward pass walks time in reverse: when
//! step `t` is processed, every later step has already pushed its adjoint
//! into the histories at `t`, and the adjoint of the fed-back input at
//! `t + 1` is the extra gradient on output `t`.

use super::params::{ConvStack, StackGrad};
use crate::nn::{causal_conv1d, gate_backward, gate_forward, Tensor};

#[derive(Debug, Clone)]
pub(crate) struct RowDecoder {
    pub context: Vec<f64>,
    pub step: usize,
    n_in: usize,
    r: usize,
    u: Vec<f64>,
    h: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    skip_sum: Vec<f64>,
}

impl RowDecoder {
    pub fn new(stack: &ConvStack, context: Vec<f64>, horizon: usize) -> Self {
        let r = stack.channels();
        let n = stack.blocks.len();
        let buf = || vec![vec![0.0; horizon * r]; n];
        Self {
            context,
            step: 0,
            n_in: stack.input.in_channels(),
            r,
            u: vec![0.0; horizon * stack.input.in_channels()],
            h: buf(),
            f: buf(),
            g: buf(),
            z: buf(),
            skip_sum: vec![0.0; horizon * r],
        }
    }

    pub fn capacity(&self) -> usize {
        self.u.len() / self.n_in
    }

    /// `input` is `[prev_value, covariates...]`.
    pub fn step(&mut self, stack: &ConvStack, input: &[f64]) -> f64 {
        let t = self.step;
        let r = self.r;
        let n_in = self.n_in;
        let n_blocks = stack.blocks.len();
        self.u[t * n_in..(t + 1) * n_in].copy_from_slice(input);

        let mut col = vec![0.0; r];
        stack.input.forward_at(&self.u, t, &mut col);
        for (c, v) in col.iter_mut().enumerate() {
            *v += self.context[c];
        }
        self.h[0][t * r..(t + 1) * r].copy_from_slice(&col);

        let span = t * r..(t + 1) * r;
        for (l, block) in stack.blocks.iter().enumerate() {
            block.filter.forward_at(&self.h[l], t, &mut self.f[l][span.clone()]);
            block.gate.forward_at(&self.h[l], t, &mut self.g[l][span.clone()]);
            gate_forward(
                &self.f[l][span.clone()],
                &self.g[l][span.clone()],
                &mut self.z[l][span.clone()],
            );
            block.skip.forward_at(&self.z[l], t, &mut col);
            for (s, v) in self.skip_sum[span.clone()].iter_mut().zip(&col) {
                *s += v;
            }
            if l + 1 < n_blocks {
                block.residual.forward_at(&self.z[l], t, &mut col);
                for c in 0..r {
                    col[c] += self.h[l][t * r + c];
                }
                self.h[l + 1][span.clone()].copy_from_slice(&col);
            }
        }
        let mut y = [0.0];
        stack.head.forward_slice(&self.skip_sum[span], &mut y);
        self.step += 1;
        y[0]
    }

    /// Gradients for all completed steps given `d loss / d y_t`. When
    /// `fed_back` is set, input 0 at step `t + 1` is treated as output `t`.
    /// Returns `d loss / d context`.
    pub fn backward(&self, stack: &ConvStack, g_out: &[f64], fed_back: bool, grad: &mut StackGrad) -> Vec<f64> {
        let steps = self.step;
        let r = self.r;
        let n_in = self.n_in;
        let n_blocks = stack.blocks.len();
        let mut g_context = vec![0.0; r];
        let mut g_u = vec![0.0; self.u.len()];
        // g_h[l] for l in 0..=n_blocks; the top entry stays zero.
        let mut g_h = vec![vec![0.0; self.h[0].len()]; n_blocks + 1];
        let mut g_z = vec![vec![0.0; self.z[0].len()]; n_blocks];
        let mut g_skip = vec![0.0; r];
        let mut g_f = vec![0.0; r];
        let mut g_g = vec![0.0; r];

        for t in (0..steps).rev() {
            let span = t * r..(t + 1) * r;
            let mut g_y = g_out[t];
            if fed_back && t + 1 < steps {
                g_y += g_u[(t + 1) * n_in];
            }
            g_skip.fill(0.0);
            stack.head.backward_slice(&self.skip_sum[span.clone()], &[g_y], &mut g_skip, &mut grad.head);

            for l in (0..n_blocks).rev() {
                let block = &stack.blocks[l];
                let bg = &mut grad.blocks[l];
                block.skip.backward_at(&self.z[l], t, &g_skip, &mut g_z[l], &mut bg.skip);
                if l + 1 < n_blocks {
                    let (lower, upper) = g_h.split_at_mut(l + 1);
                    let up = &upper[0][span.clone()];
                    block.residual.backward_at(&self.z[l], t, up, &mut g_z[l], &mut bg.residual);
                    for (a, b) in lower[l][span.clone()].iter_mut().zip(up) {
                        *a += b;
                    }
                }
                gate_backward(
                    &self.f[l][span.clone()],
                    &self.g[l][span.clone()],
                    &g_z[l][span.clone()],
                    &mut g_f,
                    &mut g_g,
                );
                block.filter.backward_at(&self.h[l], t, &g_f, &mut g_h[l], &mut bg.filter);
                block.gate.backward_at(&self.h[l], t, &g_g, &mut g_h[l], &mut bg.gate);
            }

            let g_h0 = &g_h[0][span];
            for (a, b) in g_context.iter_mut().zip(g_h0) {
                *a += b;
            }
            stack.input.backward_at(&self.u, t, g_h0, &mut g_u, &mut grad.input);
        }
        g_context
    }
}

/// Whole-sequence decoder pass with fixed inputs `[n_in, H]`, built from the
/// sequence-mode convolutions. Used as an independent check on the
/// step-wise path.
pub(crate) fn sequence_forward(stack: &ConvStack, context: &[f64], inputs: &Tensor) -> Vec<f64> {
    let steps = inputs.dim(1);
    let mut h = causal_conv1d(inputs, &stack.input).expect("decoder input shape");
    for c in 0..h.dim(0) {
        for v in h.row_mut(c) {
            *v += context[c];
        }
    }
    let mut skip_sum = Tensor::zeros(h.shape());
    let n_blocks = stack.blocks.len();
    for (l, block) in stack.blocks.iter().enumerate() {
        let f = causal_conv1d(&h, &block.filter).expect("block shape");
        let g = causal_conv1d(&h, &block.gate).expect("block shape");
        let mut z = Tensor::zeros(f.shape());
        gate_forward(f.data(), g.data(), z.data_mut());
        let s = causal_conv1d(&z, &block.skip).expect("block shape");
        skip_sum.add_scaled(&s, 1.0);
        if l + 1 < n_blocks {
            let mut res = causal_conv1d(&z, &block.residual).expect("block shape");
            res.add_scaled(&h, 1.0);
            h = res;
        }
    }
    let r = skip_sum.dim(0);
    let mut col = vec![0.0; r];
    (0..steps)
        .map(|t| {
            for c in 0..r {
                col[c] = skip_sum.get2(c, t);
            }
            let mut y = [0.0];
            stack.head.forward_slice(&col, &mut y);
            y[0]
        })
        .collect()
}
