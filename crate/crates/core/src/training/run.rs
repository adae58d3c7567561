use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::ensemble::{ema_ensemble, select_ema_alpha, sma_ensemble, validate, Period, EMA_ALPHA_GRID};
use crate::baseline::{seasonal_naive, WEEKLY_PERIOD};
use crate::data::{holdout_split, sample_batch, LagConfig, Panel, WindowBatch};
use crate::error::{Error, Result};
use crate::model::{forecast_panel, model_forward_backward, Forecast, ModelConfig, ModelParams};
use crate::nn::{AdamConfig, AdamState, Tensor};

/// Forecasts captured at one training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    /// `[S, HORIZON]` log-space forecast of the holdout days.
    pub holdout_log: Tensor,
    /// `[S, HORIZON]` log-space forecast of the days after the panel.
    pub target_log: Tensor,
    /// NWRMSLE of `holdout_log` on the holdout.
    pub validation_score: f64,
}

impl Snapshot {
    pub fn forecast_log(&self, period: Period) -> &Tensor {
        match period {
            Period::Holdout => &self.holdout_log,
            Period::Target => &self.target_log,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotScore {
    pub iteration: u64,
    pub validation_score: f64,
}

/// Everything a run learned about itself. Serializes deterministically; the
/// wall-clock duration is kept out of the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub lags: LagConfig,
    /// Training loss of iterations `1..=loss.len()`.
    pub loss: Vec<f64>,
    pub snapshots: Vec<SnapshotScore>,
    /// Seasonal-naive holdout score.
    pub baseline_score: f64,
    pub sma_score: Option<f64>,
    pub ema_alpha: Option<f64>,
    pub ema_score: Option<f64>,
    /// Set when training stopped early on a non-finite loss or gradient.
    pub divergence: Option<String>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl TrainReport {
    pub fn final_snapshot_score(&self) -> Option<f64> {
        self.snapshots.last().map(|s| s.validation_score)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub snapshots: Vec<Snapshot>,
    pub report: TrainReport,
}

/// Iterations in `1..=total_iters` at which a snapshot is taken.
pub fn snapshot_iterations(config: &TrainConfig) -> impl Iterator<Item = u64> {
    (config.snapshot_start..=config.total_iters).step_by(config.snapshot_every.max(1) as usize)
}

/// Trains on `panel` minus its last `HORIZON` days, which are held out for
/// validation. A divergence ends the run early and is recorded in the
/// report rather than returned as an error.
pub fn train(
    panel: &Panel,
    model_config: &ModelConfig,
    lags: &LagConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    lags.validate()?;
    config.validate()?;
    let started = Instant::now();
    let (train_panel, holdout) = holdout_split(panel, model_config.encoder_len)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(model_config, &mut rng);
    rng.set_stream(1);
    let mut adam = AdamState::new(&params, config.adam());

    let baseline_score = validate(&seasonal_naive(&train_panel, holdout.start, WEEKLY_PERIOD)?, &holdout)?;
    log::info!("seasonal-naive holdout score {baseline_score:.6}");

    let mut loss_curve = Vec::with_capacity(config.total_iters as usize);
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut divergence = None;
    for it in 1..=config.total_iters {
        let batch = sample_batch(&train_panel, &mut rng, config.batch_size, model_config.encoder_len, lags)?;
        let step = model_forward_backward(&params, &batch).and_then(|(loss, grads)| {
            adam.step(&mut params, &grads)?;
            Ok(loss)
        });
        match step {
            Ok(loss) => loss_curve.push(loss),
            Err(Error::Divergence(msg)) => {
                log::warn!("diverged at iteration {it}: {msg}");
                divergence = Some(format!("iteration {it}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
        if it % 500 == 0 {
            log::info!("iteration {it}: loss {:.6}", loss_curve[loss_curve.len() - 1]);
        }
        if it >= config.snapshot_start && (it - config.snapshot_start).is_multiple_of(config.snapshot_every) {
            let holdout_log = forecast_panel(&params, &train_panel, holdout.start, lags)?.values_log;
            let target_log = forecast_panel(&params, panel, panel.n_days(), lags)?.values_log;
            let snap = Snapshot {
                iteration: it,
                validation_score: validate(&Forecast::from_log(holdout_log.clone()), &holdout)?,
                holdout_log,
                target_log,
            };
            log::info!("snapshot at {it}: holdout {:.6}", snap.validation_score);
            snapshots.push(snap);
        }
    }

    let (mut sma_score, mut ema_alpha, mut ema_score) = (None, None, None);
    if !snapshots.is_empty() {
        sma_score = Some(validate(
            &sma_ensemble(&snapshots, config.sma_window, Period::Holdout)?,
            &holdout,
        )?);
        let alpha = match config.ema_alpha {
            Some(a) => a,
            None => select_ema_alpha(&snapshots, &holdout, &EMA_ALPHA_GRID)?,
        };
        ema_score = Some(validate(&ema_ensemble(&snapshots, alpha, Period::Holdout)?, &holdout)?);
        ema_alpha = Some(alpha);
    }

    let report = TrainReport {
        seed: config.seed,
        model: model_config.clone(),
        train: config.clone(),
        lags: lags.clone(),
        loss: loss_curve,
        snapshots: snapshots
            .iter()
            .map(|s| SnapshotScore {
                iteration: s.iteration,
                validation_score: s.validation_score,
            })
            .collect(),
        baseline_score,
        sma_score,
        ema_alpha,
        ema_score,
        divergence,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    log::info!("training finished in {:.1}s", report.wall_clock_secs);
    Ok(TrainOutcome {
        params,
        snapshots,
        report,
    })
}

/// Repeatedly fits one fixed batch; returns the loss before each step.
pub fn overfit_batch(
    params: &mut ModelParams,
    batch: &WindowBatch,
    adam: AdamConfig,
    iterations: u64,
) -> Result<Vec<f64>> {
    let mut state = AdamState::new(params, adam);
    let mut losses = Vec::with_capacity(iterations as usize);
    for _ in 0..iterations {
        let (loss, grads) = model_forward_backward(params, batch)?;
        state.step(params, &grads)?;
        losses.push(loss);
    }
    Ok(losses)
}
