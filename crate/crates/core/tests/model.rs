use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavecast::data::{WindowBatch, HORIZON};
use wavecast::model::{
    decode_sequence, decode_step, encode, forecast_16, model_forward_backward, model_loss, DecoderState,
    ModelConfig, ModelParams,
};
use wavecast::nn::{finite_diff_grad, max_relative_error, ParamSet, Tensor, DEFAULT_EPS};

fn tiny_config() -> ModelConfig {
    ModelConfig {
        n_layers: 2,
        decoder_layers: 2,
        channels: 4,
        encoder_len: 16,
        ..ModelConfig::default()
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_batch(rng: &mut ChaCha8Rng, cfg: &ModelConfig, b: usize) -> WindowBatch {
    WindowBatch {
        encoder_inputs: random_tensor(rng, &[b, cfg.encoder_channels, cfg.encoder_len], 1.5).map(f64::abs),
        decoder_covariates: random_tensor(rng, &[b, cfg.decoder_channels, HORIZON], 1.0).map(f64::abs),
        targets_log: random_tensor(rng, &[b, HORIZON], 2.0).map(f64::abs),
        weights: (0..b).map(|i| if i % 2 == 0 { 1.0 } else { 1.25 }).collect(),
        series: (0..b).collect(),
        decode_start: vec![0; b],
    }
}

fn random_params(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> ModelParams {
    let mut p = ModelParams::init(cfg, rng);
    // Non-zero biases so every code path carries signal.
    for t in p.tensors_mut() {
        if t.rank() == 1 {
            for v in t.data_mut() {
                *v = rng.random_range(-0.3..0.3);
            }
        }
    }
    p
}

fn gradient_error(cfg: &ModelConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = random_params(&mut rng, cfg);
    let batch = random_batch(&mut rng, cfg, 2);
    let (_, analytic) = model_forward_backward(&params, &batch).unwrap();
    let numeric = finite_diff_grad(&params, |p| model_loss(p, &batch), DEFAULT_EPS).unwrap();
    analytic
        .tensors
        .iter()
        .zip(&numeric.tensors)
        .map(|(a, n)| max_relative_error(a, n))
        .fold(0.0, f64::max)
}

#[test]
fn autoregressive_gradients_match_finite_differences() {
    let cfg = tiny_config();
    for seed in 0..5 {
        let err = gradient_error(&cfg, seed);
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn teacher_forced_gradients_match_finite_differences() {
    let cfg = ModelConfig {
        teacher_forcing: true,
        ..tiny_config()
    };
    for seed in 100..103 {
        let err = gradient_error(&cfg, seed);
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn zero_params_predict_zero() {
    let cfg = tiny_config();
    let params = ModelParams::zeros(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = random_batch(&mut rng, &cfg, 3);
    let ctx = encode(&params, &batch.encoder_inputs).unwrap();
    assert!(ctx.data().iter().all(|&v| v == 0.0));
    let f = forecast_16(&params, &batch.encoder_inputs, &batch.decoder_covariates).unwrap();
    assert_eq!(f.values_log.shape(), &[3, HORIZON]);
    assert!(f.values_log.data().iter().all(|&v| v == 0.0));
    assert!(f.values_units.data().iter().all(|&v| v == 0.0));

    let mut state = DecoderState::new();
    state.reset(&params, &ctx).unwrap();
    let y = decode_step(
        &params,
        &mut state,
        &Tensor::full(&[3], 4.0),
        &Tensor::full(&[3, cfg.decoder_channels], 1.0),
    )
    .unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
}

#[test]
fn encode_is_deterministic_and_sees_the_final_step() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = random_params(&mut rng, &cfg);
    let one = random_tensor(&mut rng, &[1, cfg.encoder_channels, cfg.encoder_len], 1.0);
    let mut twice = one.data().to_vec();
    twice.extend_from_slice(one.data());
    let twice = Tensor::from_vec(&[2, cfg.encoder_channels, cfg.encoder_len], twice).unwrap();
    let ctx = encode(&params, &twice).unwrap();
    assert_eq!(ctx.row(0), ctx.row(1));

    let mut bumped = one.clone();
    bumped.data_mut()[cfg.encoder_len - 1] += 0.5;
    let a = encode(&params, &one).unwrap();
    let b = encode(&params, &bumped).unwrap();
    assert_ne!(a, b);
}

#[test]
fn encoder_ignores_inputs_beyond_receptive_field() {
    let cfg = ModelConfig {
        encoder_len: 24,
        ..tiny_config()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = random_params(&mut rng, &cfg);
    let x = random_tensor(&mut rng, &[1, cfg.encoder_channels, 24], 1.0);
    let mut y = x.clone();
    // Receptive field is 4, so positions < 20 cannot reach the context.
    for c in 0..cfg.encoder_channels {
        for t in 0..20 {
            y.data_mut()[c * 24 + t] = 9.0;
        }
    }
    assert_eq!(encode(&params, &x).unwrap(), encode(&params, &y).unwrap());
}

#[test]
fn stepwise_decoding_matches_batched_pass() {
    let cfg = ModelConfig {
        decoder_layers: 4,
        channels: 5,
        ..tiny_config()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = random_params(&mut rng, &cfg);
    let b = 3;
    let ctx = random_tensor(&mut rng, &[b, cfg.channels], 1.0);
    let inputs = random_tensor(&mut rng, &[b, cfg.decoder_inputs(), HORIZON], 1.0);
    let batched = decode_sequence(&params, &ctx, &inputs).unwrap();

    let mut state = DecoderState::new();
    state.reset(&params, &ctx).unwrap();
    for t in 0..HORIZON {
        let prev = Tensor::from_vec(&[b], (0..b).map(|i| inputs.row(i)[t]).collect()).unwrap();
        let cov = Tensor::from_vec(
            &[b, cfg.decoder_channels],
            (0..b)
                .flat_map(|i| (1..cfg.decoder_inputs()).map(move |c| (i, c)))
                .map(|(i, c)| inputs.row(i)[c * HORIZON + t])
                .collect(),
        )
        .unwrap();
        let y = decode_step(&params, &mut state, &prev, &cov).unwrap();
        for i in 0..b {
            assert!((y.data()[i] - batched.get2(i, t)).abs() < 1e-10);
        }
    }
}

#[test]
fn decoder_use_before_reset_is_an_error() {
    let cfg = tiny_config();
    let params = ModelParams::zeros(&cfg);
    let mut state = DecoderState::new();
    assert!(decode_step(&params, &mut state, &Tensor::zeros(&[1]), &Tensor::zeros(&[1, 2])).is_err());
}

#[test]
fn forecast_ignores_future_covariates() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = random_params(&mut rng, &cfg);
    let batch = random_batch(&mut rng, &cfg, 1);
    let base = forecast_16(&params, &batch.encoder_inputs, &batch.decoder_covariates).unwrap();
    for t in 0..HORIZON - 1 {
        let mut cov = batch.decoder_covariates.clone();
        for c in 0..cfg.decoder_channels {
            for s in t + 1..HORIZON {
                cov.data_mut()[c * HORIZON + s] += 3.0;
            }
        }
        let f = forecast_16(&params, &batch.encoder_inputs, &cov).unwrap();
        assert_eq!(&f.values_log.data()[..=t], &base.values_log.data()[..=t]);
        assert_ne!(f.values_log.data()[HORIZON - 1], base.values_log.data()[HORIZON - 1]);
    }
}

#[test]
fn loss_is_zero_when_targets_equal_predictions() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = random_params(&mut rng, &cfg);
    let mut batch = random_batch(&mut rng, &cfg, 2);
    let f = forecast_16(&params, &batch.encoder_inputs, &batch.decoder_covariates).unwrap();
    batch.targets_log = f.values_log.clone();
    let (loss, grads) = model_forward_backward(&params, &batch).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.tensors.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));

    // With outputs equal to targets, teacher forcing feeds identical values.
    let tf = ModelParams {
        config: ModelConfig {
            teacher_forcing: true,
            ..cfg.clone()
        },
        ..params.clone()
    };
    assert_eq!(model_loss(&tf, &batch).unwrap(), 0.0);
}

#[test]
fn row_weight_scale_cancels() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = random_params(&mut rng, &cfg);
    let batch = random_batch(&mut rng, &cfg, 2);
    let mut doubled = batch.clone();
    for w in &mut doubled.weights {
        *w *= 2.0;
    }
    let a = model_loss(&params, &batch).unwrap();
    let b = model_loss(&params, &doubled).unwrap();
    assert!((a - b).abs() < 1e-12 * a.max(1.0));
}

#[test]
fn encoder_and_decoder_parameters_are_disjoint() {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let params = random_params(&mut rng, &cfg);
    let batch = random_batch(&mut rng, &cfg, 2);
    let ctx = encode(&params, &batch.encoder_inputs).unwrap();

    let mut changed = params.clone();
    for t in changed.decoder.blocks.iter_mut().flat_map(|b| [&mut b.filter.weights, &mut b.gate.weights]) {
        for v in t.data_mut() {
            *v += 0.25;
        }
    }
    changed.decoder.head.bias.data_mut()[0] = 3.0;
    assert_eq!(encode(&changed, &batch.encoder_inputs).unwrap(), ctx);

    let inputs = random_tensor(&mut rng, &[2, cfg.decoder_inputs(), HORIZON], 1.0);
    let before = decode_sequence(&params, &ctx, &inputs).unwrap();
    let mut enc_changed = params.clone();
    enc_changed.encoder.head.bias.data_mut()[0] = 5.0;
    assert_eq!(decode_sequence(&enc_changed, &ctx, &inputs).unwrap(), before);
}
