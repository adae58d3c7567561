use serde::{Deserialize, Serialize};

use crate::data::{DECODER_CHANNELS, ENCODER_CHANNELS, HORIZON};
use crate::error::{Error, Result};

/// Network shape. Dilations double per layer: `1, 2, 4, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Encoder gated blocks.
    pub n_layers: usize,
    /// Decoder gated blocks.
    pub decoder_layers: usize,
    /// Residual, skip, and context width.
    pub channels: usize,
    pub kernel_size: usize,
    pub encoder_len: usize,
    pub horizon: usize,
    pub encoder_channels: usize,
    pub decoder_channels: usize,
    /// Feed ground truth instead of the model's own outputs back into the
    /// decoder during training.
    pub teacher_forcing: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 8,
            decoder_layers: 4,
            channels: 16,
            kernel_size: 2,
            encoder_len: 365,
            horizon: HORIZON,
            encoder_channels: ENCODER_CHANNELS,
            decoder_channels: DECODER_CHANNELS,
            teacher_forcing: false,
        }
    }
}

impl ModelConfig {
    pub fn dilation(layer: usize) -> usize {
        1 << layer
    }

    /// Steps of encoder input that can reach the final encoder position.
    pub fn receptive_field(&self) -> usize {
        (self.kernel_size - 1) * ((1 << self.n_layers) - 1) + 1
    }

    pub fn decoder_receptive_field(&self) -> usize {
        (self.kernel_size - 1) * ((1 << self.decoder_layers) - 1) + 1
    }

    pub fn decoder_inputs(&self) -> usize {
        1 + self.decoder_channels
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("model config: {m}")));
        if self.n_layers == 0 || self.decoder_layers == 0 || self.n_layers > 16 || self.decoder_layers > 16 {
            return bad("layer counts must lie in 1..=16".into());
        }
        if self.channels == 0 || self.encoder_channels == 0 {
            return bad("channel counts must be positive".into());
        }
        if self.kernel_size < 2 {
            return bad("kernel_size must be >= 2".into());
        }
        if self.encoder_channels != ENCODER_CHANNELS || self.decoder_channels != DECODER_CHANNELS {
            return bad(format!(
                "the feature builder produces {ENCODER_CHANNELS} encoder and {DECODER_CHANNELS} decoder channels"
            ));
        }
        if self.horizon != HORIZON {
            return bad(format!("horizon must be {HORIZON}"));
        }
        if self.receptive_field() > self.encoder_len {
            return bad(format!(
                "receptive field {} exceeds encoder_len {}",
                self.receptive_field(),
                self.encoder_len
            ));
        }
        Ok(())
    }
}
