use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavecast::Error;

use crate::commands::{self, Ensemble, PredictArgs};
use crate::config::{DataPaths, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wavecast", version, about = "Dilated-convolution seq2seq sales forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply to omitted keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for data generation and training.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct DataDir {
    /// Directory holding train.csv, items.csv, and test.csv; overrides the
    /// configured data paths.
    #[arg(long, value_name = "PATH")]
    data_dir: Option<PathBuf>,
}

impl DataDir {
    fn paths(&self, cfg: &RunConfig) -> DataPaths {
        match &self.data_dir {
            Some(d) => DataPaths::in_dir(d),
            None => cfg.data.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Single,
    Sma,
    Ema,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset in the competition file formats.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH", default_value = "data")]
        out_dir: PathBuf,
    },
    /// Train a model and record prediction snapshots.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataDir,
        #[arg(long, value_name = "PATH", default_value = "out")]
        out_dir: PathBuf,
    },
    /// Forecast the test period and write a submission file.
    Predict {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataDir,
        /// Directory holding the training artifacts.
        #[arg(long, value_name = "PATH", default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, value_name = "PATH")]
        params: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        snapshots: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "single")]
        ensemble: EnsembleArg,
        /// EMA smoothing factor in (0, 1]; selected on the holdout if omitted.
        #[arg(long, value_name = "F")]
        alpha: Option<f64>,
        /// Submission path; defaults to OUT_DIR/submission.csv.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Score a submission against truth rows.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        submission: PathBuf,
        /// Actual sales in the train schema.
        #[arg(long, value_name = "PATH")]
        truth: PathBuf,
        #[arg(long, value_name = "PATH")]
        items: PathBuf,
    },
    /// Compare analytic gradients with finite differences on tiny models.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Divergence(_) => EXIT_NUMERIC,
        Error::InvalidArgument(_)
        | Error::InvalidWindow(_)
        | Error::Ingestion { .. }
        | Error::DuplicateRecord { .. }
        | Error::Schema { .. }
        | Error::Format { .. }
        | Error::Io { .. } => EXIT_DATA,
    }
}

fn or_default(path: Option<PathBuf>, dir: &Path, file: &str) -> PathBuf {
    path.unwrap_or_else(|| dir.join(file))
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> wavecast::Result<i32> {
    match command {
        Command::Generate { common, out_dir } => {
            let cfg = RunConfig::resolve(common.config.as_deref(), common.seed)?;
            let paths = commands::generate(&cfg, &out_dir)?;
            log::info!("wrote {}", paths.train.display());
        }
        Command::Train { common, data, out_dir } => {
            let cfg = RunConfig::resolve(common.config.as_deref(), common.seed)?;
            let outcome = commands::train(&cfg, &data.paths(&cfg), &out_dir)?;
            let r = &outcome.report;
            println!("baseline {:.6}", r.baseline_score);
            for s in &r.snapshots {
                println!("snapshot {} {:.6}", s.iteration, s.validation_score);
            }
            if let (Some(sma), Some(ema), Some(alpha)) = (r.sma_score, r.ema_score, r.ema_alpha) {
                println!("sma {sma:.6}");
                println!("ema {ema:.6} alpha {alpha}");
            }
        }
        Command::Predict {
            common,
            data,
            out_dir,
            params,
            snapshots,
            ensemble,
            alpha,
            out,
        } => {
            let cfg = RunConfig::resolve(common.config.as_deref(), common.seed)?;
            let args = PredictArgs {
                params: or_default(params, &out_dir, commands::PARAMS_FILE),
                snapshots: or_default(snapshots, &out_dir, commands::SNAPSHOTS_FILE),
                ensemble: match ensemble {
                    EnsembleArg::Single => Ensemble::Single,
                    EnsembleArg::Sma => Ensemble::Sma,
                    EnsembleArg::Ema => Ensemble::Ema,
                },
                alpha,
                out: or_default(out, &out_dir, commands::SUBMISSION_FILE),
            };
            let rows = commands::predict(&cfg, &data.paths(&cfg), &args)?;
            log::info!("wrote {} rows to {}", rows.len(), args.out.display());
        }
        Command::Evaluate {
            submission,
            truth,
            items,
        } => {
            let score = commands::evaluate(&submission, &truth, &items)?;
            println!("{score:.6}");
        }
        Command::Gradcheck { common, inject_fault } => {
            let cfg = RunConfig::resolve(common.config.as_deref(), common.seed)?;
            let report = commands::gradcheck(&cfg, inject_fault)?;
            for (name, err) in &report.groups {
                println!("{name} {err:.3e}");
            }
            println!("max {:.3e}", report.max_error());
            if !report.passed() {
                eprintln!(
                    "error: gradient check failed: max relative error {:.3e} >= {:e}",
                    report.max_error(),
                    commands::GRADCHECK_TOLERANCE
                );
                return Ok(EXIT_NUMERIC);
            }
        }
    }
    Ok(EXIT_OK)
}
