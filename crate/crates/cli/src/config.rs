//! The run configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavecast::data::{LagConfig, SyntheticConfig};
use wavecast::model::ModelConfig;
use wavecast::training::TrainConfig;
use wavecast::{Error, Result};

/// Input file locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub train: PathBuf,
    pub items: PathBuf,
    pub test: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self::in_dir(Path::new("data"))
    }
}

impl DataPaths {
    pub const TRAIN_FILE: &'static str = "train.csv";
    pub const ITEMS_FILE: &'static str = "items.csv";
    pub const TEST_FILE: &'static str = "test.csv";
    pub const TRUTH_FILE: &'static str = "truth.csv";

    pub fn in_dir(dir: &Path) -> Self {
        Self {
            train: dir.join(Self::TRAIN_FILE),
            items: dir.join(Self::ITEMS_FILE),
            test: dir.join(Self::TEST_FILE),
        }
    }
}

/// Shape of the randomized models used by `gradcheck`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub models: usize,
    pub n_layers: usize,
    pub decoder_layers: usize,
    pub channels: usize,
    pub encoder_len: usize,
    pub batch_size: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            models: 1,
            n_layers: 2,
            decoder_layers: 2,
            channels: 4,
            encoder_len: 16,
            batch_size: 2,
        }
    }
}

impl GradcheckConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            n_layers: self.n_layers,
            decoder_layers: self.decoder_layers,
            channels: self.channels,
            encoder_len: self.encoder_len,
            ..ModelConfig::default()
        }
    }
}

/// Every section defaults independently; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces the seed of the `train` and `synthetic` sections.
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub lags: LagConfig,
    pub synthetic: SyntheticConfig,
    pub gradcheck: GradcheckConfig,
    pub data: DataPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `path` (or the defaults) and applies a command-line seed.
    pub fn resolve(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if seed.is_some() {
            cfg.seed = seed;
        }
        if let Some(s) = cfg.seed {
            cfg.train.seed = s;
            cfg.synthetic.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.lags.validate()?;
        self.synthetic.validate()?;
        if self.gradcheck.models == 0 || self.gradcheck.batch_size == 0 {
            return Err(Error::Config("gradcheck models and batch_size must be >= 1".into()));
        }
        self.gradcheck.model_config().validate()
    }
}
