//! Seeded synthetic retail panels in the competition file formats.
//!
//! Expected sales for series `s` on day `t` are
//! `base_s * (1 + trend_s * t) * weekly(t) * yearly(t) * uplift(s, t)`;
//! observed sales add Gaussian noise with standard deviation
//! `noise_scale * sqrt(expected)`, then round and clip at zero.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::panel::{assemble_panel, DateRange, Panel, SeriesKey, HORIZON};
use super::records::{ItemMeta, ItemTable, RawRecord, TestRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_series: usize,
    /// Observed days; `HORIZON` further days are simulated for the test period.
    pub n_days: usize,
    pub n_stores: usize,
    pub start_date: NaiveDate,
    pub base_min: f64,
    pub base_max: f64,
    pub weekly_amplitude: f64,
    pub yearly_amplitude: f64,
    /// Per-day relative trend slopes are drawn uniformly from this range.
    pub trend_range: [f64; 2],
    pub promo_probability: f64,
    pub promo_uplift: f64,
    pub noise_scale: f64,
    pub perishable_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_series: 200,
            n_days: 500,
            n_stores: 5,
            start_date: NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
            base_min: 2.0,
            base_max: 40.0,
            weekly_amplitude: 0.3,
            yearly_amplitude: 0.2,
            trend_range: [-4e-4, 4e-4],
            promo_probability: 0.1,
            promo_uplift: 1.8,
            noise_scale: 0.5,
            perishable_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        let bad = |m: &str| Err(Error::Config(format!("synthetic config: {m}")));
        if self.n_series == 0 || self.n_days == 0 || self.n_stores == 0 {
            return bad("counts must be positive");
        }
        if !unit.contains(&self.promo_probability) || !unit.contains(&self.perishable_fraction) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.base_min > 0.0 && self.base_min <= self.base_max) {
            return bad("need 0 < base_min <= base_max");
        }
        if self.trend_range[0] > self.trend_range[1] {
            return bad("trend_range must be ordered");
        }
        if self.promo_uplift <= 0.0 || self.noise_scale < 0.0 {
            return bad("promo_uplift must be > 0 and noise_scale >= 0");
        }
        if self.weekly_amplitude.abs() >= 1.0 || self.yearly_amplitude.abs() >= 1.0 {
            return bad("seasonal amplitudes must lie in (-1, 1)");
        }
        Ok(())
    }

    pub fn total_days(&self) -> usize {
        self.n_days + HORIZON
    }
}

/// Ground-truth generating parameters for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesComponents {
    pub key: SeriesKey,
    pub base: f64,
    pub trend: f64,
    pub perishable: bool,
    /// Noise-free expected sales for all `n_days + HORIZON` days.
    pub expected: Vec<f64>,
    pub promo: Vec<bool>,
    /// Observed (noisy, rounded) sales for all `n_days + HORIZON` days.
    pub sales: Vec<f64>,
}

/// Synthetic data in both in-memory and file-record form.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub panel: Panel,
    pub components: Vec<SeriesComponents>,
    pub items: Vec<ItemMeta>,
    /// Non-zero sales rows of the observed period, as the competition ships them.
    pub train: Vec<RawRecord>,
    /// Every (key, day) of the test period.
    pub test: Vec<TestRecord>,
    /// Test-period sales in the train schema, ids matching `test`.
    pub truth: Vec<RawRecord>,
}

pub fn weekly_factor(amplitude: f64, t: usize) -> f64 {
    1.0 + amplitude * (TAU * t as f64 / 7.0).sin()
}

pub fn yearly_factor(amplitude: f64, t: usize) -> f64 {
    1.0 + amplitude * (TAU * t as f64 / 365.25).sin()
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = config.total_days();
    let items_per_store = config.n_series.div_ceil(config.n_stores);

    let mut items: Vec<ItemMeta> = (0..items_per_store)
        .map(|j| ItemMeta {
            item_id: 100_000 + j as u64,
            family: "GROCERY".into(),
            class: 1000 + (j % 10) as u32,
            perishable: false,
        })
        .collect();
    for m in &mut items {
        m.perishable = rng.random_bool(config.perishable_fraction);
        if m.perishable {
            m.family = "PRODUCE".into();
        }
    }

    let (ln_lo, ln_hi) = (config.base_min.ln(), config.base_max.ln());
    let mut components = Vec::with_capacity(config.n_series);
    for s in 0..config.n_series {
        let item = &items[s / config.n_stores];
        let key = SeriesKey {
            store_id: (s % config.n_stores) as u32 + 1,
            item_id: item.item_id,
        };
        let base = if ln_lo == ln_hi {
            config.base_min
        } else {
            rng.random_range(ln_lo..ln_hi).exp()
        };
        let trend = if config.trend_range[0] == config.trend_range[1] {
            config.trend_range[0]
        } else {
            rng.random_range(config.trend_range[0]..config.trend_range[1])
        };
        let mut expected = Vec::with_capacity(total);
        let mut promo = Vec::with_capacity(total);
        let mut sales = Vec::with_capacity(total);
        for t in 0..total {
            let on_promo = rng.random_bool(config.promo_probability);
            let uplift = if on_promo { config.promo_uplift } else { 1.0 };
            let mean = (base
                * (1.0 + trend * t as f64)
                * weekly_factor(config.weekly_amplitude, t)
                * yearly_factor(config.yearly_amplitude, t)
                * uplift)
                .max(0.0);
            let noise = if config.noise_scale > 0.0 && mean > 0.0 {
                Normal::new(0.0, config.noise_scale * mean.sqrt())
                    .expect("positive sd")
                    .sample(&mut rng)
            } else {
                0.0
            };
            expected.push(mean);
            promo.push(on_promo);
            sales.push((mean + noise).round().max(0.0));
        }
        components.push(SeriesComponents {
            key,
            base,
            trend,
            perishable: item.perishable,
            expected,
            promo,
            sales,
        });
    }
    components.sort_by_key(|c| c.key);

    let mut train = Vec::new();
    let mut id = 0u64;
    for t in 0..config.n_days {
        let date = config.start_date + chrono::Duration::days(t as i64);
        for c in &components {
            if c.sales[t] > 0.0 {
                train.push(RawRecord {
                    id,
                    date,
                    store_id: c.key.store_id,
                    item_id: c.key.item_id,
                    unit_sales: c.sales[t],
                    on_promotion: Some(c.promo[t]),
                });
                id += 1;
            }
        }
    }
    let mut test = Vec::new();
    let mut truth = Vec::new();
    for t in config.n_days..total {
        let date = config.start_date + chrono::Duration::days(t as i64);
        for c in &components {
            test.push(TestRecord {
                id,
                date,
                store_id: c.key.store_id,
                item_id: c.key.item_id,
                on_promotion: Some(c.promo[t]),
            });
            truth.push(RawRecord {
                id,
                date,
                store_id: c.key.store_id,
                item_id: c.key.item_id,
                unit_sales: c.sales[t],
                on_promotion: Some(c.promo[t]),
            });
            id += 1;
        }
    }

    let table = ItemTable::new(&items);
    let panel = assemble_panel(
        &train,
        &test,
        &table,
        DateRange::new(config.start_date, config.n_days)?,
    )?;
    Ok(SyntheticData {
        panel,
        components,
        items,
        train,
        test,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn autocorr(x: &[f64], lag: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
        cov / var
    }

    #[test]
    fn flat_config_gives_constant_series() {
        let cfg = SyntheticConfig {
            n_series: 4,
            n_days: 60,
            weekly_amplitude: 0.0,
            yearly_amplitude: 0.0,
            trend_range: [0.0, 0.0],
            promo_probability: 0.0,
            noise_scale: 0.0,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&cfg).unwrap();
        for s in 0..4 {
            let row = data.panel.sales_log.row(s);
            assert!(row.iter().all(|&v| v == row[0]));
        }
    }

    #[test]
    fn weekly_seasonality_shows_in_autocorrelation() {
        let cfg = SyntheticConfig {
            n_series: 3,
            n_days: 300,
            weekly_amplitude: 0.5,
            base_min: 30.0,
            base_max: 60.0,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&cfg).unwrap();
        for c in &data.components {
            assert!(autocorr(&c.sales, 7) > autocorr(&c.sales, 3));
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let cfg = SyntheticConfig {
            n_series: 6,
            n_days: 40,
            seed: 11,
            ..SyntheticConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.train, b.train);
        let c = generate_synthetic(&SyntheticConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn invalid_probability_rejected() {
        let cfg = SyntheticConfig {
            promo_probability: 1.5,
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
