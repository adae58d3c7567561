use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavecast::data::{generate_synthetic, holdout_split, sample_batch, LagConfig, Panel, SyntheticConfig, HORIZON};
use wavecast::metric::{nwrmsle, EvaluationRow};
use wavecast::model::{Forecast, ModelConfig, ModelParams};
use wavecast::nn::AdamConfig;
use wavecast::training::{
    overfit_batch, snapshot_iterations, sma_ensemble, train, validate, Period, TrainConfig, TrainReport,
};

fn model() -> ModelConfig {
    ModelConfig {
        n_layers: 3,
        decoder_layers: 2,
        channels: 4,
        encoder_len: 16,
        ..ModelConfig::default()
    }
}

fn lags() -> LagConfig {
    LagConfig {
        quarterly_lag: 7,
        yearly_lag: 28,
        promo_offsets: [0, -28],
    }
}

fn panel() -> Panel {
    generate_synthetic(&SyntheticConfig {
        n_series: 12,
        n_days: 80,
        n_stores: 2,
        seed: 4,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .panel
}

fn short_run(total_iters: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        base_lr: 3e-3,
        total_iters,
        snapshot_start: 10,
        snapshot_every: 5,
        seed: 21,
        ..TrainConfig::default()
    }
}

#[test]
fn schedule_follows_congruence_rule() {
    for start in 1..12u64 {
        for every in 1..6u64 {
            for total in 0..40u64 {
                let cfg = TrainConfig {
                    snapshot_start: start,
                    snapshot_every: every,
                    total_iters: total,
                    ..TrainConfig::default()
                };
                let expected: Vec<u64> = (1..=total).filter(|&i| i >= start && (i - start) % every == 0).collect();
                assert_eq!(snapshot_iterations(&cfg).collect::<Vec<_>>(), expected);
            }
        }
    }
}

#[test]
fn no_snapshots_before_start() {
    let out = train(&panel(), &model(), &lags(), &short_run(9)).unwrap();
    assert!(out.snapshots.is_empty());
    assert_eq!(out.report.loss.len(), 9);
    assert_eq!(out.report.sma_score, None);
    assert_eq!(out.report.ema_score, None);
}

#[test]
fn runs_are_bit_reproducible() {
    let cfg = short_run(30);
    let a = train(&panel(), &model(), &lags(), &cfg).unwrap();
    let b = train(&panel(), &model(), &lags(), &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.snapshots, b.snapshots);
    let strip = |r: &TrainReport| TrainReport {
        wall_clock_secs: 0.0,
        ..r.clone()
    };
    assert_eq!(strip(&a.report), strip(&b.report));
    assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    assert_eq!(
        a.snapshots.iter().map(|s| s.iteration).collect::<Vec<_>>(),
        snapshot_iterations(&cfg).collect::<Vec<_>>()
    );

    let other = train(&panel(), &model(), &lags(), &TrainConfig { seed: 22, ..cfg }).unwrap();
    assert_ne!(other.report.loss, a.report.loss);
}

#[test]
fn report_json_round_trips() {
    let out = train(&panel(), &model(), &lags(), &short_run(20)).unwrap();
    let text = serde_json::to_string(&out.report).unwrap();
    assert!(!text.contains("wall_clock"));
    let back: TrainReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.loss, out.report.loss);
    assert_eq!(back.snapshots, out.report.snapshots);
    assert_eq!(back.seed, 21);
}

#[test]
fn snapshot_scores_and_sma_bound() {
    let p = panel();
    let cfg = short_run(40);
    let out = train(&p, &model(), &lags(), &cfg).unwrap();
    let (_, holdout) = holdout_split(&p, model().encoder_len).unwrap();

    for s in &out.snapshots {
        // Direct evaluation over the flattened rows.
        let mut rows = Vec::new();
        for i in 0..p.n_series() {
            for h in 0..HORIZON {
                let pred = s.holdout_log.get2(i, h).exp_m1();
                let actual = p.sales_log.get2(i, holdout.start + h).exp_m1();
                rows.push(EvaluationRow::new(pred, actual, p.weights[i]));
            }
        }
        assert!((nwrmsle(&rows).unwrap() - s.validation_score).abs() < 1e-12);
    }

    let window = &out.snapshots[out.snapshots.len().saturating_sub(cfg.sma_window)..];
    let worst = window.iter().map(|s| s.validation_score).fold(f64::MIN, f64::max);
    let sma = validate(&sma_ensemble(&out.snapshots, cfg.sma_window, Period::Holdout).unwrap(), &holdout).unwrap();
    assert_eq!(out.report.sma_score, Some(sma));
    assert!(sma <= worst + 1e-12, "sma {sma} worst {worst}");
}

#[test]
fn validate_edge_cases() {
    let p = panel();
    let (_, holdout) = holdout_split(&p, 16).unwrap();
    assert_eq!(validate(&Forecast::from_log(holdout.actual_log.clone()), &holdout).unwrap(), 0.0);
    let wrong = Forecast::from_log(wavecast::nn::Tensor::zeros(&[p.n_series() + 1, HORIZON]));
    assert!(validate(&wrong, &holdout).is_err());
}

#[test]
fn fixed_batch_loss_is_nearly_monotone() {
    let p = panel();
    let cfg = model();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut params = ModelParams::init(&cfg, &mut rng);
    let batch = sample_batch(&p, &mut rng, 8, cfg.encoder_len, &lags()).unwrap();
    let losses = overfit_batch(&mut params, &batch, AdamConfig { base_lr: 2e-3, ..AdamConfig::default() }, 400).unwrap();
    let mut best = losses[..50].iter().copied().fold(f64::MAX, f64::min);
    for (i, &l) in losses.iter().enumerate().skip(50) {
        assert!(l <= best * 1.05, "iteration {}: loss {l} exceeds running min {best} by > 5%", i + 1);
        best = best.min(l);
    }
    assert!(losses[losses.len() - 1] < losses[0]);
}

#[test]
fn divergence_is_reported_not_raised() {
    let cfg = TrainConfig {
        base_lr: 1e300,
        ..short_run(30)
    };
    let out = train(&panel(), &model(), &lags(), &cfg).unwrap();
    assert!(out.report.divergence.is_some());
    assert!(out.report.loss.len() < 30);
}
