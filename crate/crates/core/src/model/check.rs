//! Finite-difference verification of the full forward/backward pass on
//! small randomized models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::network::model_loss;
use super::params::ModelParams;
use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::nn::{finite_diff_grad, max_relative_error, GradientSet, ParamSet, Tensor};

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// Glorot weights with random biases, and a batch of non-negative log-space
/// inputs and targets with alternating row weights.
pub fn random_case(config: &ModelConfig, batch_size: usize, seed: u64) -> Result<(ModelParams, WindowBatch)> {
    config.validate()?;
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(config, &mut rng);
    for t in params.tensors_mut() {
        if t.rank() == 1 {
            for v in t.data_mut() {
                *v = rng.random_range(-0.3..0.3);
            }
        }
    }
    let h = config.horizon;
    let batch = WindowBatch {
        encoder_inputs: uniform(&mut rng, &[batch_size, config.encoder_channels, config.encoder_len], 0.0, 2.0)?,
        decoder_covariates: uniform(&mut rng, &[batch_size, config.decoder_channels, h], 0.0, 1.0)?,
        targets_log: uniform(&mut rng, &[batch_size, h], 0.0, 2.0)?,
        weights: (0..batch_size).map(|i| if i % 2 == 0 { 1.0 } else { 1.25 }).collect(),
        series: (0..batch_size).collect(),
        decode_start: vec![config.encoder_len; batch_size],
    };
    Ok((params, batch))
}

/// Max relative error between `analytic` and central differences of the
/// loss, per named parameter tensor.
pub fn gradient_errors(
    params: &ModelParams,
    batch: &WindowBatch,
    analytic: &GradientSet,
    eps: f64,
) -> Result<Vec<(String, f64)>> {
    analytic.check_mirrors(params)?;
    let numeric = finite_diff_grad(params, |p| model_loss(p, batch), eps)?;
    Ok(params
        .names()
        .into_iter()
        .zip(analytic.tensors.iter().zip(&numeric.tensors))
        .map(|(name, (a, n))| (name, max_relative_error(a, n)))
        .collect())
}
