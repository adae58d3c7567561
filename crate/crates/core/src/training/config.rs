use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::AdamConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub base_lr: f64,
    pub decay_factor: f64,
    pub decay_every: u64,
    pub total_iters: u64,
    pub snapshot_start: u64,
    pub snapshot_every: u64,
    pub sma_window: usize,
    /// Fixed EMA smoothing factor; `None` selects one on the holdout.
    pub ema_alpha: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            batch_size: 128,
            base_lr: adam.base_lr,
            decay_factor: adam.decay_factor,
            decay_every: adam.decay_every,
            total_iters: 13_000,
            snapshot_start: 5000,
            snapshot_every: 2000,
            sma_window: 5,
            ema_alpha: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            base_lr: self.base_lr,
            decay_factor: self.decay_factor,
            decay_every: self.decay_every,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train config: {m}")));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.total_iters == 0 {
            return bad("total_iters must be >= 1");
        }
        if self.snapshot_start == 0 || self.snapshot_every == 0 {
            return bad("snapshot_start and snapshot_every must be >= 1");
        }
        if self.sma_window == 0 {
            return bad("sma_window must be >= 1");
        }
        if let Some(a) = self.ema_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return bad("ema_alpha must lie in (0, 1]");
            }
        }
        self.adam().validate()
    }
}
