use super::run::Snapshot;
use crate::data::Holdout;
use crate::error::{Error, Result};
use crate::metric::nwrmsle;
use crate::model::Forecast;
use crate::nn::Tensor;

/// Candidate smoothing factors `0.1, 0.2, ..., 1.0`.
pub const EMA_ALPHA_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Which of a snapshot's two forecasts to ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// The 16 days held out at the end of the training data.
    Holdout,
    /// The 16 days after the full panel.
    Target,
}

fn forecasts(snapshots: &[Snapshot], period: Period) -> Result<Vec<&Tensor>> {
    let Some(first) = snapshots.first() else {
        return Err(Error::invalid("ensembling needs at least one snapshot"));
    };
    let v: Vec<&Tensor> = snapshots.iter().map(|s| s.forecast_log(period)).collect();
    let shape = first.forecast_log(period).shape();
    if v.iter().any(|t| t.shape() != shape) {
        return Err(Error::invalid("snapshot forecasts differ in shape"));
    }
    Ok(v)
}

/// Log-space mean of the last `min(window, len)` snapshots.
pub fn sma_ensemble(snapshots: &[Snapshot], window: usize, period: Period) -> Result<Forecast> {
    if window == 0 {
        return Err(Error::invalid("sma window must be >= 1"));
    }
    let all = forecasts(snapshots, period)?;
    let used = &all[all.len().saturating_sub(window)..];
    let mut acc = Tensor::zeros(used[0].shape());
    for t in used {
        acc.add_scaled(t, 1.0);
    }
    let n = used.len() as f64;
    Ok(Forecast::from_log(acc.map(|v| v / n)))
}

/// `s_1 = p_1`, `s_k = alpha * p_k + (1 - alpha) * s_{k-1}`; returns `s_last`.
pub fn ema_ensemble(snapshots: &[Snapshot], alpha: f64, period: Period) -> Result<Forecast> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("ema alpha {alpha} outside (0, 1]")));
    }
    let all = forecasts(snapshots, period)?;
    let mut s = all[0].clone();
    for p in &all[1..] {
        for (sv, &pv) in s.data_mut().iter_mut().zip(p.data()) {
            *sv = alpha * pv + (1.0 - alpha) * *sv;
        }
    }
    Ok(Forecast::from_log(s))
}

/// The grid alpha whose holdout EMA scores best; ties go to the larger alpha.
pub fn select_ema_alpha(snapshots: &[Snapshot], holdout: &Holdout, grid: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let score = validate(&ema_ensemble(snapshots, alpha, Period::Holdout)?, holdout)?;
        best = match best {
            Some((a, s)) if s < score || (s == score && a > alpha) => Some((a, s)),
            _ => Some((alpha, score)),
        };
    }
    best.map(|(a, _)| a).ok_or_else(|| Error::invalid("empty alpha grid"))
}

/// NWRMSLE of `forecast` against the holdout actuals.
pub fn validate(forecast: &Forecast, holdout: &Holdout) -> Result<f64> {
    nwrmsle(&holdout.rows(&forecast.values_units)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::HORIZON;

    fn snap(iteration: u64, value: f64) -> Snapshot {
        Snapshot {
            iteration,
            holdout_log: Tensor::full(&[1, HORIZON], value),
            target_log: Tensor::full(&[1, HORIZON], value + 1.0),
            validation_score: 0.0,
        }
    }

    fn holdout(value: f64) -> Holdout {
        Holdout {
            start: 0,
            actual_log: Tensor::full(&[1, HORIZON], value),
            weights: vec![1.0],
        }
    }

    #[test]
    fn sma_means_in_log_space() {
        let s = [snap(1, 0.0), snap(2, 2.0)];
        let f = sma_ensemble(&s, 5, Period::Holdout).unwrap();
        assert!(f.values_log.data().iter().all(|&v| v == 1.0));
        let f = sma_ensemble(&s, 1, Period::Target).unwrap();
        assert!(f.values_log.data().iter().all(|&v| v == 3.0));
        assert!(sma_ensemble(&[], 5, Period::Holdout).is_err());
        assert!(sma_ensemble(&s, 0, Period::Holdout).is_err());
    }

    #[test]
    fn ema_recursion() {
        let s = [snap(1, 2.0), snap(2, 4.0)];
        let f = ema_ensemble(&s, 0.5, Period::Holdout).unwrap();
        assert!(f.values_log.data().iter().all(|&v| v == 3.0));
        let f = ema_ensemble(&s, 1.0, Period::Holdout).unwrap();
        assert_eq!(f.values_log, s[1].holdout_log);
        let c = [snap(1, 1.5), snap(2, 1.5), snap(3, 1.5)];
        for a in EMA_ALPHA_GRID {
            let f = ema_ensemble(&c, a, Period::Holdout).unwrap();
            assert!(f.values_log.data().iter().all(|&v| (v - 1.5).abs() < 1e-15));
        }
        for a in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(ema_ensemble(&s, a, Period::Holdout).is_err());
        }
    }

    #[test]
    fn alpha_selection() {
        let h = holdout(1.0);
        assert_eq!(select_ema_alpha(&[snap(1, 0.3)], &h, &EMA_ALPHA_GRID).unwrap(), 1.0);
        assert_eq!(select_ema_alpha(&[snap(1, 0.3)], &h, &[1.0]).unwrap(), 1.0);
        let exact_then_noisy = [snap(1, 1.0), snap(2, 2.5)];
        let a = select_ema_alpha(&exact_then_noisy, &h, &EMA_ALPHA_GRID).unwrap();
        assert!(a < 1.0);
        assert_eq!(a, 0.1);
        assert!(select_ema_alpha(&exact_then_noisy, &h, &[]).is_err());
    }

    #[test]
    fn validation_scores() {
        let h = holdout(0.7);
        assert_eq!(validate(&Forecast::from_log(h.actual_log.clone()), &h).unwrap(), 0.0);
        let z = holdout(0.0);
        assert_eq!(validate(&Forecast::from_log(Tensor::zeros(&[1, HORIZON])), &z).unwrap(), 0.0);
        assert!(validate(&Forecast::from_log(Tensor::zeros(&[2, HORIZON])), &z).is_err());
    }
}
