//! Encoder and decoder input channels for one forecast window.
//!
//! For a window whose first target day is `decode_start = d`, the encoder
//! covers days `d - encoder_len .. d` and the decoder covers `d .. d + 16`.
//!
//! Encoder channels, in order:
//!   0. `sales_log(t)`
//!   1. `promo(t + promo_offsets[0])`
//!   2. `sales_log(t - quarterly_lag)`
//!   3. `sales_log(t - yearly_lag)`
//!   4. `promo(t + promo_offsets[1])`
//!
//! Decoder covariate channels, in order:
//!   0. `promo(t + promo_offsets[0])`
//!   1. `sales_log(t - yearly_lag)`
//!
//! Reads before the panel start, or past the known promotion range, are 0.

use serde::{Deserialize, Serialize};

use super::panel::{Panel, HORIZON};
use crate::error::{Error, Result};

pub const ENCODER_CHANNELS: usize = 5;
pub const DECODER_CHANNELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagConfig {
    pub quarterly_lag: usize,
    pub yearly_lag: usize,
    /// Day offsets applied to the promotion channels; negative looks back.
    pub promo_offsets: [i64; 2],
}

impl Default for LagConfig {
    fn default() -> Self {
        Self {
            quarterly_lag: 91,
            yearly_lag: 365,
            promo_offsets: [0, -365],
        }
    }
}

impl LagConfig {
    pub fn validate(&self) -> Result<()> {
        // The decoder reads sales(t - yearly_lag) for every target day, which
        // must be observed history.
        if self.yearly_lag < HORIZON {
            return Err(Error::Config(format!(
                "yearly_lag must be >= {HORIZON} so decoder lags stay in the observed past"
            )));
        }
        if self.quarterly_lag == 0 {
            return Err(Error::Config("quarterly_lag must be >= 1".into()));
        }
        Ok(())
    }
}

/// Inputs for one series and one decode start.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    /// `[ENCODER_CHANNELS * encoder_len]`, channel-major.
    pub encoder: Vec<f64>,
    /// `[DECODER_CHANNELS * HORIZON]`, channel-major.
    pub decoder: Vec<f64>,
    /// The `HORIZON` target days, when they lie inside the panel.
    pub targets: Option<Vec<f64>>,
}

/// Inclusive range of decode starts that have full history and whose
/// covariates are known. Starts up to `n_days - HORIZON` also have targets.
pub fn decode_start_bounds(panel: &Panel, encoder_len: usize) -> (usize, usize) {
    (encoder_len, panel.n_days())
}

pub fn build_features(
    panel: &Panel,
    series: usize,
    decode_start: usize,
    encoder_len: usize,
    lags: &LagConfig,
) -> Result<WindowFeatures> {
    if series >= panel.n_series() {
        return Err(Error::invalid(format!("series index {series} out of range")));
    }
    let (lo, hi) = decode_start_bounds(panel, encoder_len);
    if decode_start < lo || decode_start > hi {
        return Err(Error::InvalidWindow(format!(
            "decode start {decode_start} needs {encoder_len} days of history and known \
             covariates; valid range is {lo}..={hi}"
        )));
    }
    let d = decode_start as i64;
    let n = encoder_len;
    let q = lags.quarterly_lag as i64;
    let y = lags.yearly_lag as i64;
    let [po0, po1] = lags.promo_offsets;

    let mut encoder = vec![0.0; ENCODER_CHANNELS * n];
    for p in 0..n {
        let t = d - n as i64 + p as i64;
        encoder[p] = panel.sales_at(series, t);
        encoder[n + p] = panel.promo_at(series, t + po0);
        encoder[2 * n + p] = panel.sales_at(series, t - q);
        encoder[3 * n + p] = panel.sales_at(series, t - y);
        encoder[4 * n + p] = panel.promo_at(series, t + po1);
    }

    let mut decoder = vec![0.0; DECODER_CHANNELS * HORIZON];
    for h in 0..HORIZON {
        let t = d + h as i64;
        decoder[h] = panel.promo_at(series, t + po0);
        decoder[HORIZON + h] = panel.sales_at(series, t - y);
    }

    let targets = (decode_start + HORIZON <= panel.n_days())
        .then(|| panel.sales_log.row(series)[decode_start..decode_start + HORIZON].to_vec());

    Ok(WindowFeatures {
        encoder,
        decoder,
        targets,
    })
}
