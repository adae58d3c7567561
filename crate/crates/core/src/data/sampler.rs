use rand::Rng;

use super::features::{build_features, LagConfig, DECODER_CHANNELS, ENCODER_CHANNELS};
use super::panel::{Panel, HORIZON};
use crate::error::{Error, Result};
use crate::metric::EvaluationRow;
use crate::nn::Tensor;

pub const DEFAULT_BATCH_SIZE: usize = 128;

/// A mini-batch of training windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    /// `[B, ENCODER_CHANNELS, T_enc]`
    pub encoder_inputs: Tensor,
    /// `[B, DECODER_CHANNELS, HORIZON]`
    pub decoder_covariates: Tensor,
    /// `[B, HORIZON]`
    pub targets_log: Tensor,
    pub weights: Vec<f64>,
    pub series: Vec<usize>,
    pub decode_start: Vec<usize>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Builds a batch from explicit (series, decode_start) pairs.
    pub fn from_windows(
        panel: &Panel,
        windows: &[(usize, usize)],
        encoder_len: usize,
        lags: &LagConfig,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::invalid("batch needs at least one window"));
        }
        let b = windows.len();
        let mut enc = Vec::with_capacity(b * ENCODER_CHANNELS * encoder_len);
        let mut dec = Vec::with_capacity(b * DECODER_CHANNELS * HORIZON);
        let mut targets = Vec::with_capacity(b * HORIZON);
        for &(s, d) in windows {
            let f = build_features(panel, s, d, encoder_len, lags)?;
            let t = f.targets.ok_or_else(|| {
                Error::InvalidWindow(format!("decode start {d} has no complete target range"))
            })?;
            enc.extend(f.encoder);
            dec.extend(f.decoder);
            targets.extend(t);
        }
        Ok(Self {
            encoder_inputs: Tensor::from_vec(&[b, ENCODER_CHANNELS, encoder_len], enc)?,
            decoder_covariates: Tensor::from_vec(&[b, DECODER_CHANNELS, HORIZON], dec)?,
            targets_log: Tensor::from_vec(&[b, HORIZON], targets)?,
            weights: windows.iter().map(|&(s, _)| panel.weights[s]).collect(),
            series: windows.iter().map(|&(s, _)| s).collect(),
            decode_start: windows.iter().map(|&(_, d)| d).collect(),
        })
    }
}

/// Inclusive range of decode starts whose encoder history and targets both
/// lie inside the panel, or `None` when there are none.
pub fn training_start_range(panel: &Panel, encoder_len: usize) -> Option<(usize, usize)> {
    let hi = panel.n_days().checked_sub(HORIZON)?;
    (encoder_len <= hi).then_some((encoder_len, hi))
}

/// Draws `batch_size` series uniformly with replacement, each with an
/// independent uniform decode start.
pub fn sample_batch<R: Rng + ?Sized>(
    panel: &Panel,
    rng: &mut R,
    batch_size: usize,
    encoder_len: usize,
    lags: &LagConfig,
) -> Result<WindowBatch> {
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be >= 1"));
    }
    let (lo, hi) = training_start_range(panel, encoder_len).ok_or_else(|| {
        Error::invalid(format!(
            "a {}-day panel has no training windows with encoder length {encoder_len}",
            panel.n_days()
        ))
    })?;
    let windows: Vec<(usize, usize)> = (0..batch_size)
        .map(|_| {
            let s = rng.random_range(0..panel.n_series());
            let d = rng.random_range(lo..=hi);
            (s, d)
        })
        .collect();
    WindowBatch::from_windows(panel, &windows, encoder_len, lags)
}

/// Ground truth for the final `HORIZON` days of a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Holdout {
    /// Index of the first holdout day in the full panel.
    pub start: usize,
    /// `[S, HORIZON]`
    pub actual_log: Tensor,
    pub weights: Vec<f64>,
}

impl Holdout {
    pub fn n_series(&self) -> usize {
        self.weights.len()
    }

    /// Pairs unit-space predictions `[S, HORIZON]` with the actuals.
    pub fn rows(&self, predicted_units: &Tensor) -> Result<Vec<EvaluationRow>> {
        if predicted_units.shape() != self.actual_log.shape() {
            return Err(Error::invalid(format!(
                "forecast shape {:?} does not align with holdout {:?}",
                predicted_units.shape(),
                self.actual_log.shape()
            )));
        }
        Ok(predicted_units
            .data()
            .iter()
            .zip(self.actual_log.data())
            .enumerate()
            .map(|(i, (&p, &a))| EvaluationRow::new(p, a.exp_m1(), self.weights[i / HORIZON]))
            .collect())
    }
}

/// Splits off the last `HORIZON` days. The returned training panel ends
/// before them, so no window sampled from it can reach a holdout target.
pub fn holdout_split(panel: &Panel, encoder_len: usize) -> Result<(Panel, Holdout)> {
    let t = panel.n_days();
    if t <= HORIZON + encoder_len {
        return Err(Error::invalid(format!(
            "a {t}-day panel is too short for a {HORIZON}-day holdout after {encoder_len} days of history"
        )));
    }
    let start = t - HORIZON;
    let train = panel.truncate(start)?;
    let s = panel.n_series();
    let mut actual = Vec::with_capacity(s * HORIZON);
    for i in 0..s {
        actual.extend_from_slice(&panel.sales_log.row(i)[start..]);
    }
    Ok((
        train,
        Holdout {
            start,
            actual_log: Tensor::from_vec(&[s, HORIZON], actual)?,
            weights: panel.weights.clone(),
        },
    ))
}
