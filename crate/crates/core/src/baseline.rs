//! Seasonal-naive comparator.

use crate::data::{Panel, HORIZON};
use crate::error::{Error, Result};
use crate::model::Forecast;
use crate::nn::Tensor;

pub const WEEKLY_PERIOD: usize = 7;

/// Repeats the last observed `period` days across the horizon: day
/// `d + h` copies day `d + h - period * ceil((h + 1) / period)`.
pub fn seasonal_naive(panel: &Panel, decode_start: usize, period: usize) -> Result<Forecast> {
    if period == 0 || decode_start < period || decode_start > panel.n_days() {
        return Err(Error::invalid(format!(
            "seasonal naive needs {period} observed days before decode_start {decode_start} (panel has {})",
            panel.n_days()
        )));
    }
    let s = panel.n_series();
    let mut out = Vec::with_capacity(s * HORIZON);
    for i in 0..s {
        let row = panel.sales_log.row(i);
        for h in 0..HORIZON {
            let back = period * (h / period + 1);
            out.push(row[decode_start + h - back]);
        }
    }
    Ok(Forecast::from_log(Tensor::from_vec(&[s, HORIZON], out)?))
}
