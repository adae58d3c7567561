//! The sequence-to-sequence forecaster: a dilated causal convolution
//! encoder summarised into a context vector, and a parameter-disjoint
//! convolutional decoder run autoregressively over the horizon.

mod check;
mod config;
mod decoder;
mod encoder;
mod io;
mod network;
mod params;

pub use check::{gradient_errors, random_case};
pub use config::ModelConfig;
pub use io::{
    decode_archive, encode_archive, load_params, params_from_bytes, params_to_bytes, read_archive,
    save_params, write_archive, MODEL_MAGIC,
};
pub use network::{
    decode_sequence, decode_step, encode, forecast_16, forecast_panel, model_forward_backward,
    model_loss, DecoderState, Forecast,
};
pub use params::{ConvStack, GatedBlock, ModelParams};
