//! Training loop, holdout validation, prediction snapshots, and snapshot
//! ensembling.

mod config;
mod ensemble;
mod io;
mod run;

pub use config::TrainConfig;
pub use ensemble::{ema_ensemble, select_ema_alpha, sma_ensemble, validate, Period, EMA_ALPHA_GRID};
pub use io::{load_snapshots, save_snapshots, snapshots_from_bytes, snapshots_to_bytes, SNAPSHOT_MAGIC};
pub use run::{overfit_batch, snapshot_iterations, train, Snapshot, SnapshotScore, TrainOutcome, TrainReport};
