use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wavecast::data::{
    assemble_panel, generate_synthetic, holdout_split, load_items, load_records, load_submission,
    load_test_records, write_items, write_records, write_submission, write_test_records, DateRange,
    ItemTable, Panel, SubmissionRow, TestRecord, HORIZON,
};
use wavecast::metric::{nwrmsle, perishable_weight, EvaluationRow};
use wavecast::model::{forecast_panel, gradient_errors, load_params, model_forward_backward, random_case, save_params};
use wavecast::nn::{ParamSet, DEFAULT_EPS};
use wavecast::training::{
    ema_ensemble, load_snapshots, save_snapshots, select_ema_alpha, sma_ensemble, train as run_training,
    Period, TrainOutcome, TrainReport, EMA_ALPHA_GRID,
};
use wavecast::{Error, Result};

use crate::config::{DataPaths, RunConfig};

pub const PARAMS_FILE: &str = "params.bin";
pub const SNAPSHOTS_FILE: &str = "snapshots.bin";
pub const REPORT_FILE: &str = "report.json";
pub const SUBMISSION_FILE: &str = "submission.csv";

/// Gradient checks pass when every relative error is below this.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Writes `train.csv`, `items.csv`, `test.csv`, and `truth.csv` (test-period
/// sales in the train schema) into `out_dir`.
pub fn generate(cfg: &RunConfig, out_dir: &Path) -> Result<DataPaths> {
    let data = generate_synthetic(&cfg.synthetic)?;
    create_dir(out_dir)?;
    let paths = DataPaths::in_dir(out_dir);
    write_records(&paths.train, &data.train)?;
    write_items(&paths.items, &data.items)?;
    write_test_records(&paths.test, &data.test)?;
    write_records(out_dir.join(DataPaths::TRUTH_FILE), &data.truth)?;
    Ok(paths)
}

/// The training panel and test rows read from competition-schema files.
pub struct Dataset {
    pub panel: Panel,
    pub test: Vec<TestRecord>,
    pub items: ItemTable,
}

/// The panel runs from the first training date to the day before the first
/// test date.
pub fn load_dataset(paths: &DataPaths) -> Result<Dataset> {
    let train = load_records(&paths.train)?;
    let test = load_test_records(&paths.test)?;
    let items = ItemTable::new(&load_items(&paths.items)?);
    let first = train.iter().map(|r| r.date).min().ok_or_else(|| {
        Error::InvalidArgument(format!("{}: no training records", paths.train.display()))
    })?;
    let test_start = test.iter().map(|r| r.date).min().ok_or_else(|| {
        Error::InvalidArgument(format!("{}: no test rows", paths.test.display()))
    })?;
    let last = test_start.pred_opt().expect("date after the minimum");
    let panel = assemble_panel(&train, &test, &items, DateRange::between(first, last)?)?;
    Ok(Dataset { panel, test, items })
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a TrainReport,
}

pub fn report_json(cfg: &RunConfig, report: &TrainReport) -> String {
    let mut text = serde_json::to_string_pretty(&RunReport { config: cfg, report }).expect("report serializes");
    text.push('\n');
    text
}

/// Trains and writes parameters, snapshots, and the report to `out_dir`.
/// After a divergence the artifacts so far are still written and a
/// divergence error is returned.
pub fn train(cfg: &RunConfig, data: &DataPaths, out_dir: &Path) -> Result<TrainOutcome> {
    let dataset = load_dataset(data)?;
    let outcome = run_training(&dataset.panel, &cfg.model, &cfg.lags, &cfg.train)?;
    create_dir(out_dir)?;
    save_params(out_dir.join(PARAMS_FILE), &outcome.params)?;
    save_snapshots(out_dir.join(SNAPSHOTS_FILE), &dataset.panel.keys, &outcome.snapshots)?;
    let report_path = out_dir.join(REPORT_FILE);
    fs::write(&report_path, report_json(cfg, &outcome.report)).map_err(|e| Error::Io {
        path: report_path,
        source: e,
    })?;
    log::info!("wall-clock training time {:.2}s", outcome.report.wall_clock_secs);
    if let Some(msg) = &outcome.report.divergence {
        return Err(Error::Divergence(msg.clone()));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// The final parameters.
    Single,
    /// Mean of the last `sma_window` snapshots.
    Sma,
    /// Exponential moving average over all snapshots.
    Ema,
}

pub struct PredictArgs {
    pub params: PathBuf,
    pub snapshots: PathBuf,
    pub ensemble: Ensemble,
    pub alpha: Option<f64>,
    pub out: PathBuf,
}

/// Forecasts the test period and writes one submission row per test row.
pub fn predict(cfg: &RunConfig, data: &DataPaths, args: &PredictArgs) -> Result<Vec<SubmissionRow>> {
    if let Some(a) = args.alpha {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Config(format!("--alpha {a} must lie in (0, 1]")));
        }
    }
    let dataset = load_dataset(data)?;
    let panel = &dataset.panel;
    let forecast = match args.ensemble {
        Ensemble::Single => {
            let params = load_params(&args.params)?;
            if params.config != cfg.model {
                return Err(Error::Config(format!(
                    "{} was trained with {:?}, which differs from the configured model {:?}",
                    args.params.display(),
                    params.config,
                    cfg.model
                )));
            }
            forecast_panel(&params, panel, panel.n_days(), &cfg.lags)?
        }
        ensemble => {
            let (keys, snapshots) = load_snapshots(&args.snapshots)?;
            if keys != panel.keys {
                return Err(Error::InvalidArgument(format!(
                    "{} covers different series than the data",
                    args.snapshots.display()
                )));
            }
            if snapshots.is_empty() {
                return Err(Error::Config(format!(
                    "{} holds no snapshots; train past snapshot_start or use --ensemble single",
                    args.snapshots.display()
                )));
            }
            if ensemble == Ensemble::Sma {
                sma_ensemble(&snapshots, cfg.train.sma_window, Period::Target)?
            } else {
                let alpha = match args.alpha.or(cfg.train.ema_alpha) {
                    Some(a) => a,
                    None => {
                        let (_, holdout) = holdout_split(panel, cfg.model.encoder_len)?;
                        select_ema_alpha(&snapshots, &holdout, &EMA_ALPHA_GRID)?
                    }
                };
                ema_ensemble(&snapshots, alpha, Period::Target)?
            }
        }
    };

    let index = panel.key_index();
    let t = panel.n_days() as i64;
    let rows = dataset
        .test
        .iter()
        .map(|r| {
            let s = index[&wavecast::data::SeriesKey {
                store_id: r.store_id,
                item_id: r.item_id,
            }];
            let h = (panel.dates.offset(r.date) - t) as usize;
            debug_assert!(h < HORIZON);
            SubmissionRow {
                id: r.id,
                unit_sales: forecast.values_units.get2(s, h),
            }
        })
        .collect::<Vec<_>>();
    write_submission(&args.out, &rows)?;
    Ok(rows)
}

/// NWRMSLE of a submission against truth rows in the train schema.
pub fn evaluate(submission: &Path, truth: &Path, items: &Path) -> Result<f64> {
    let predicted = load_submission(submission)?;
    let actual = load_records(truth)?;
    let items = ItemTable::new(&load_items(items)?);
    let mut by_id = HashMap::with_capacity(predicted.len());
    for r in &predicted {
        if by_id.insert(r.id, r.unit_sales).is_some() {
            return Err(Error::InvalidArgument(format!("id {} appears twice in the submission", r.id)));
        }
    }
    let mut rows = Vec::with_capacity(actual.len());
    let mut truth_ids = HashSet::with_capacity(actual.len());
    for a in &actual {
        let p = by_id
            .get(&a.id)
            .ok_or_else(|| Error::InvalidArgument(format!("id {} is missing from the submission", a.id)))?;
        truth_ids.insert(a.id);
        rows.push(EvaluationRow::new(*p, a.unit_sales, perishable_weight(items.is_perishable(a.item_id))));
    }
    if let Some(extra) = predicted.iter().find(|r| !truth_ids.contains(&r.id)) {
        return Err(Error::InvalidArgument(format!("id {} is not in the truth file", extra.id)));
    }
    nwrmsle(&rows)
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    /// Worst relative error per parameter tensor, over all checked models.
    pub groups: Vec<(String, f64)>,
}

impl GradcheckReport {
    pub fn max_error(&self) -> f64 {
        self.groups.iter().map(|g| g.1).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.1 < GRADCHECK_TOLERANCE)
    }
}

/// Compares analytic and finite-difference gradients on randomized tiny
/// models. `corrupt_backward` perturbs the analytic gradient; it exists so
/// tests can confirm a broken backward pass is caught.
pub fn gradcheck(cfg: &RunConfig, corrupt_backward: bool) -> Result<GradcheckReport> {
    let model = cfg.gradcheck.model_config();
    let base_seed = cfg.seed.unwrap_or(0);
    let mut groups: Vec<(String, f64)> = Vec::new();
    for m in 0..cfg.gradcheck.models as u64 {
        let (params, batch) = random_case(&model, cfg.gradcheck.batch_size, base_seed.wrapping_add(m))?;
        let (_, mut analytic) = model_forward_backward(&params, &batch)?;
        if corrupt_backward {
            let last = analytic.tensors.len() - 1;
            for v in analytic.tensors[last - 1].data_mut() {
                *v *= 1.01;
            }
        }
        let errors = gradient_errors(&params, &batch, &analytic, DEFAULT_EPS)?;
        if groups.is_empty() {
            groups = errors;
        } else {
            for (g, (_, e)) in groups.iter_mut().zip(errors) {
                g.1 = g.1.max(e);
            }
        }
        debug_assert_eq!(groups.len(), params.names().len());
    }
    Ok(GradcheckReport { groups })
}
