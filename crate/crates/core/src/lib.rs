//! Sales forecasting with a dilated causal convolution sequence-to-sequence
//! network, scored with NWRMSLE and ensembled over training snapshots.

pub mod baseline;
pub mod data;
mod error;
pub mod metric;
pub mod model;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
