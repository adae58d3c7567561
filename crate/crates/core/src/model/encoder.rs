//! Encoder forward/backward for a single window.
//!
//! Only the final encoder position feeds the context. Working back from it,
//! block `l` needs its input on a grid of stride `2^l` ending at the final
//! position, and its gated output on every other point of that grid. The
//! forward pass evaluates exactly those points, so each block does half the
//! work of the one below it. Terms are accumulated in the same order as a
//! dense pass over the whole window, and the result is identical.

use super::params::{ConvStack, StackGrad};
use crate::nn::{
    accumulate_conv1d_backward, accumulate_strided_conv1d_backward, causal_conv1d, gate_backward,
    gate_forward, strided_conv1d, Tensor,
};

pub(crate) struct EncoderCache {
    x: Tensor,
    /// Block inputs, `[channels, grid_l]`.
    h: Vec<Tensor>,
    f: Vec<Tensor>,
    g: Vec<Tensor>,
    /// Gated outputs, `[channels, grid_{l+1}]`.
    z: Vec<Tensor>,
    skip_sum: Vec<f64>,
}

/// Grid sizes of the block inputs; the first equals the receptive field.
fn grid_sizes(blocks: usize, kernel: usize) -> Vec<usize> {
    let mut sizes = vec![0; blocks];
    let mut outputs = 1;
    for l in (0..blocks).rev() {
        sizes[l] = 2 * outputs + kernel - 2;
        outputs = sizes[l];
    }
    sizes
}

/// `x` is one window, channel-major `[channels, len]`, with
/// `len >= receptive_field`.
pub(crate) fn forward(stack: &ConvStack, x: &[f64], channels: usize, receptive_field: usize) -> (Vec<f64>, EncoderCache) {
    let n_blocks = stack.blocks.len();
    let kernel = stack.blocks[0].filter.kernel_size();
    let sizes = grid_sizes(n_blocks, kernel);
    debug_assert_eq!(sizes[0], receptive_field);
    let len = x.len() / channels;
    let keep = receptive_field;
    let mut cropped = Vec::with_capacity(channels * keep);
    for c in 0..channels {
        cropped.extend_from_slice(&x[c * len + len - keep..(c + 1) * len]);
    }
    let x = Tensor::from_vec(&[channels, keep], cropped).expect("cropped window shape");
    let r = stack.channels();

    let mut h = causal_conv1d(&x, &stack.input).expect("validated input shape");
    let mut cache = EncoderCache {
        x,
        h: Vec::with_capacity(n_blocks),
        f: Vec::with_capacity(n_blocks),
        g: Vec::with_capacity(n_blocks),
        z: Vec::with_capacity(n_blocks),
        skip_sum: vec![0.0; r],
    };
    let mut z_last = vec![0.0; r];
    let mut skip_col = vec![0.0; r];
    for (l, block) in stack.blocks.iter().enumerate() {
        let outputs = if l + 1 < n_blocks { sizes[l + 1] } else { 1 };
        let f = strided_conv1d(&h, &block.filter, 2, outputs);
        let g = strided_conv1d(&h, &block.gate, 2, outputs);
        let mut z = Tensor::zeros(f.shape());
        gate_forward(f.data(), g.data(), z.data_mut());

        for (i, zl) in z_last.iter_mut().enumerate() {
            *zl = z.get2(i, outputs - 1);
        }
        block.skip.forward_at(&z_last, 0, &mut skip_col);
        for (s, v) in cache.skip_sum.iter_mut().zip(&skip_col) {
            *s += v;
        }

        let next = if l + 1 < n_blocks {
            let mut res = causal_conv1d(&z, &block.residual).expect("block shape");
            let width = h.dim(1);
            for (c, row) in res.data_mut().chunks_mut(outputs).enumerate() {
                let h_row = &h.data()[c * width..(c + 1) * width];
                for (q, a) in row.iter_mut().enumerate() {
                    *a += h_row[kernel - 1 + 2 * q];
                }
            }
            Some(res)
        } else {
            None
        };
        cache.h.push(h);
        cache.f.push(f);
        cache.g.push(g);
        cache.z.push(z);
        match next {
            Some(n) => h = n,
            None => break,
        }
    }
    let mut context = vec![0.0; stack.head.out_dim()];
    stack.head.forward_slice(&cache.skip_sum, &mut context);
    (context, cache)
}

/// Accumulates parameter gradients for one window given `d loss / d context`.
pub(crate) fn backward(stack: &ConvStack, cache: &EncoderCache, g_context: &[f64], grad: &mut StackGrad) {
    let r = stack.channels();
    let kernel = stack.blocks[0].filter.kernel_size();

    let mut g_skip = vec![0.0; r];
    stack.head.backward_slice(&cache.skip_sum, g_context, &mut g_skip, &mut grad.head);

    let mut g_h_next: Option<Tensor> = None;
    let mut z_last = vec![0.0; r];
    let mut g_z_last = vec![0.0; r];
    for l in (0..cache.z.len()).rev() {
        let block = &stack.blocks[l];
        let bg = &mut grad.blocks[l];
        let z = &cache.z[l];
        let h = &cache.h[l];
        let outputs = z.dim(1);
        let width = h.dim(1);

        let mut g_z = Tensor::zeros(z.shape());
        if let Some(g_next) = &g_h_next {
            accumulate_conv1d_backward(z, &block.residual, g_next, &mut g_z, &mut bg.residual);
        }
        for i in 0..r {
            z_last[i] = z.get2(i, outputs - 1);
        }
        g_z_last.fill(0.0);
        block.skip.backward_at(&z_last, 0, &g_skip, &mut g_z_last, &mut bg.skip);
        for (i, v) in g_z_last.iter().enumerate() {
            g_z.data_mut()[i * outputs + outputs - 1] += v;
        }

        let mut g_f = Tensor::zeros(z.shape());
        let mut g_g = Tensor::zeros(z.shape());
        gate_backward(
            cache.f[l].data(),
            cache.g[l].data(),
            g_z.data(),
            g_f.data_mut(),
            g_g.data_mut(),
        );
        let mut g_h = Tensor::zeros(h.shape());
        if let Some(g_next) = &g_h_next {
            for c in 0..r {
                let src = &g_next.data()[c * outputs..(c + 1) * outputs];
                let dst = &mut g_h.data_mut()[c * width..(c + 1) * width];
                for (q, v) in src.iter().enumerate() {
                    dst[kernel - 1 + 2 * q] += v;
                }
            }
        }
        accumulate_strided_conv1d_backward(h, &block.filter, 2, &g_f, &mut g_h, &mut bg.filter);
        accumulate_strided_conv1d_backward(h, &block.gate, 2, &g_g, &mut g_h, &mut bg.gate);
        g_h_next = Some(g_h);
    }
    if let Some(g_h0) = g_h_next {
        let mut scratch = Tensor::zeros(cache.x.shape());
        accumulate_conv1d_backward(&cache.x, &stack.input, &g_h0, &mut scratch, &mut grad.input);
    }
}


#[cfg(test)]
mod tests {
    use super::super::{ModelConfig, ModelParams};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_sizes_match_receptive_field() {
        for kernel in 2..5 {
            for layers in 1..9 {
                let cfg = ModelConfig {
                    n_layers: layers,
                    kernel_size: kernel,
                    ..ModelConfig::default()
                };
                let sizes = grid_sizes(layers, kernel);
                assert_eq!(sizes[0], cfg.receptive_field());
                assert_eq!(sizes[layers - 1], kernel);
            }
        }
    }

    #[test]
    fn sparse_pass_matches_dense_pass() {
        for (seed, kernel, layers) in [(0u64, 2usize, 3usize), (1, 2, 6), (2, 3, 3), (3, 2, 1)] {
            let cfg = ModelConfig {
                n_layers: layers,
                kernel_size: kernel,
                channels: 3,
                encoder_len: 200,
                ..ModelConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut params = ModelParams::init(&cfg, &mut rng);
            for v in params.encoder.blocks.iter_mut().flat_map(|b| b.filter.bias.data_mut().iter_mut()) {
                *v = rng.random_range(-0.5..0.5);
            }
            let stack = &params.encoder;
            let x: Vec<f64> = (0..cfg.encoder_channels * cfg.encoder_len).map(|_| rng.random_range(0.0..3.0)).collect();
            let rf = cfg.receptive_field();
            let (ctx, cache) = forward(stack, &x, cfg.encoder_channels, rf);
            let (ctx_dense, cache_dense) = dense::forward(stack, &x, cfg.encoder_channels, rf);
            assert_eq!(ctx, ctx_dense);

            let g_ctx: Vec<f64> = (0..cfg.channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut grad = stack.zero_grad();
            let mut grad_dense = stack.zero_grad();
            backward(stack, &cache, &g_ctx, &mut grad);
            dense::backward(stack, &cache_dense, &g_ctx, &mut grad_dense);
            let mut a = Vec::new();
            let mut b = Vec::new();
            super::super::params::into_gradient_set(grad, stack.zero_grad())
                .tensors
                .iter()
                .for_each(|t| a.extend_from_slice(t.data()));
            super::super::params::into_gradient_set(grad_dense, stack.zero_grad())
                .tensors
                .iter()
                .for_each(|t| b.extend_from_slice(t.data()));
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0), "{u} vs {v}");
            }
        }
    }
}
