use std::collections::{BTreeSet, HashMap};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::records::{ItemTable, RawRecord, TestRecord};
use crate::error::{Error, Result};
use crate::metric::{log1p_clipped, perishable_weight};
use crate::nn::Tensor;

/// Forecast horizon in days.
pub const HORIZON: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub store_id: u32,
    pub item_id: u64,
}

/// A contiguous run of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub days: usize,
}

impl DateRange {
    pub fn new(start: NaiveDate, days: usize) -> Result<Self> {
        if days == 0 {
            return Err(Error::invalid("date range must be non-empty"));
        }
        Ok(Self { start, days })
    }

    /// Inclusive on both ends.
    pub fn between(first: NaiveDate, last: NaiveDate) -> Result<Self> {
        let days = (last - first).num_days() + 1;
        if days <= 0 {
            return Err(Error::invalid(format!("empty date range {first}..={last}")));
        }
        Self::new(first, days as usize)
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    /// Day offset of `date` from the range start (may be out of range).
    pub fn offset(&self, date: NaiveDate) -> i64 {
        (date - self.start).num_days()
    }
}

/// Dense `[series, day]` grid of `ln(sales + 1)` plus promotion flags that
/// extend `HORIZON` days past the last sales day.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub keys: Vec<SeriesKey>,
    pub dates: DateRange,
    /// `[S, T]`
    pub sales_log: Tensor,
    /// `[S, T + HORIZON]`
    pub promo: Tensor,
    pub weights: Vec<f64>,
}

impl Panel {
    pub fn new(
        keys: Vec<SeriesKey>,
        dates: DateRange,
        sales_log: Tensor,
        promo: Tensor,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let s = keys.len();
        if s == 0 {
            return Err(Error::invalid("panel needs at least one series"));
        }
        if sales_log.shape() != [s, dates.days] || promo.shape() != [s, dates.days + HORIZON] {
            return Err(Error::invalid(format!(
                "panel tensors {:?}/{:?} do not match {s} series x {} days",
                sales_log.shape(),
                promo.shape(),
                dates.days
            )));
        }
        if weights.len() != s {
            return Err(Error::invalid("one weight per series required"));
        }
        if sales_log.data().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("sales_log must be finite and >= 0"));
        }
        Ok(Self {
            keys,
            dates,
            sales_log,
            promo,
            weights,
        })
    }

    pub fn n_series(&self) -> usize {
        self.keys.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.days
    }

    /// `sales_log[s, t]`, zero outside `[0, T)`.
    pub fn sales_at(&self, series: usize, t: i64) -> f64 {
        if t < 0 || t >= self.n_days() as i64 {
            0.0
        } else {
            self.sales_log.get2(series, t as usize)
        }
    }

    /// `promo[s, t]`, zero outside `[0, T + HORIZON)`.
    pub fn promo_at(&self, series: usize, t: i64) -> f64 {
        if t < 0 || t >= (self.n_days() + HORIZON) as i64 {
            0.0
        } else {
            self.promo.get2(series, t as usize)
        }
    }

    /// The first `days` sales days, with promotions kept for `HORIZON` more.
    pub fn truncate(&self, days: usize) -> Result<Panel> {
        if days == 0 || days > self.n_days() {
            return Err(Error::invalid(format!(
                "cannot truncate a {}-day panel to {days} days",
                self.n_days()
            )));
        }
        let s = self.n_series();
        let mut sales = Vec::with_capacity(s * days);
        let mut promo = Vec::with_capacity(s * (days + HORIZON));
        for i in 0..s {
            sales.extend_from_slice(&self.sales_log.row(i)[..days]);
            promo.extend_from_slice(&self.promo.row(i)[..days + HORIZON]);
        }
        Panel::new(
            self.keys.clone(),
            DateRange::new(self.dates.start, days)?,
            Tensor::from_vec(&[s, days], sales)?,
            Tensor::from_vec(&[s, days + HORIZON], promo)?,
            self.weights.clone(),
        )
    }

    pub fn key_index(&self) -> HashMap<SeriesKey, usize> {
        self.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect()
    }
}

/// Builds the dense panel over every (store, item) key that appears in either
/// `records` or `future`. Cells without a record are zero sales; sales are
/// clipped at zero before `ln(x + 1)`. Records dated outside `dates` are
/// ignored. `future` supplies promotions for the `HORIZON` days after the
/// range and must not fall outside them.
pub fn assemble_panel(
    records: &[RawRecord],
    future: &[TestRecord],
    items: &ItemTable,
    dates: DateRange,
) -> Result<Panel> {
    let t_len = dates.days;
    let keys: Vec<SeriesKey> = records
        .iter()
        .map(|r| SeriesKey {
            store_id: r.store_id,
            item_id: r.item_id,
        })
        .chain(future.iter().map(|r| SeriesKey {
            store_id: r.store_id,
            item_id: r.item_id,
        }))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if keys.is_empty() {
        return Err(Error::invalid("no records to assemble"));
    }
    let index: HashMap<SeriesKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let s = keys.len();
    let mut sales = Tensor::zeros(&[s, t_len]);
    let mut promo = Tensor::zeros(&[s, t_len + HORIZON]);
    let mut seen = vec![false; s * t_len];

    for r in records {
        let off = dates.offset(r.date);
        if off < 0 || off >= t_len as i64 {
            continue;
        }
        let t = off as usize;
        let i = index[&SeriesKey {
            store_id: r.store_id,
            item_id: r.item_id,
        }];
        if std::mem::replace(&mut seen[i * t_len + t], true) {
            return Err(Error::DuplicateRecord {
                store_id: r.store_id,
                item_id: r.item_id,
                date: r.date,
            });
        }
        sales.set2(i, t, log1p_clipped(r.unit_sales));
        if r.on_promotion == Some(true) {
            promo.set2(i, t, 1.0);
        }
    }

    let mut seen_future = vec![false; s * HORIZON];
    for r in future {
        let off = dates.offset(r.date) - t_len as i64;
        if off < 0 || off >= HORIZON as i64 {
            return Err(Error::invalid(format!(
                "test row {} dated {} lies outside the {HORIZON} days after {}",
                r.id,
                r.date,
                dates.date(t_len - 1)
            )));
        }
        let i = index[&SeriesKey {
            store_id: r.store_id,
            item_id: r.item_id,
        }];
        if std::mem::replace(&mut seen_future[i * HORIZON + off as usize], true) {
            return Err(Error::DuplicateRecord {
                store_id: r.store_id,
                item_id: r.item_id,
                date: r.date,
            });
        }
        if r.on_promotion == Some(true) {
            promo.set2(i, t_len + off as usize, 1.0);
        }
    }

    let weights = keys
        .iter()
        .map(|k| perishable_weight(items.is_perishable(k.item_id)))
        .collect();
    Panel::new(keys, dates, sales, promo, weights)
}
