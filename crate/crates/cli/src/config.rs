use std::fs;
use std::path::{Path, PathBuf};

use bicogan_core::bicogan::TrainingConfig;
use bicogan_core::data::{load_idx, Dataset, Split, SyntheticSpec};
use bicogan_core::eval::EvalConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where samples come from. Exactly one variant is named in the JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Idx(IdxPaths),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdxPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

/// Everything one `train` invocation needs. Training fields sit at the top
/// level next to the dataset and output settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub training: TrainingConfig,
    pub dataset: DatasetSource,
    pub out_dir: PathBuf,
    /// Epochs between evaluations and checkpoints; 0 keeps only the final one.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.training
            .validate()
            .map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()
                .map_err(|e| CliError::usage(format!("invalid dataset: {e}")))?;
        }
        if self.eval.n_gen == 0 || self.eval.ips_bases == 0 || self.eval.ips_variations == 0 {
            return Err(CliError::usage("eval sizes must be positive"));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(CliError::usage("out_dir is empty"));
        }
        Ok(())
    }

    pub fn datasets(&self) -> CliResult<(Dataset, Dataset)> {
        self.dataset.load()
    }
}

impl DatasetSource {
    pub fn load(&self) -> CliResult<(Dataset, Dataset)> {
        match self {
            DatasetSource::Synthetic(spec) => Ok((spec.generate(Split::Train)?, spec.generate(Split::Test)?)),
            DatasetSource::Idx(p) => Ok((
                load_idx(&p.train_images, &p.train_labels, Split::Train)?,
                load_idx(&p.test_images, &p.test_labels, Split::Test)?,
            )),
        }
    }
}

/// What the CLI records in a checkpoint header beside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub run: RunConfig,
    /// `(rows, cols)` when samples are images.
    pub image_shape: Option<(usize, usize)>,
}

impl CheckpointMeta {
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("meta serializes")
    }

    /// `None` for checkpoints written outside the CLI.
    pub fn from_value(v: &serde_json::Value) -> Option<Self> {
        serde_json::from_value(v.clone()).ok()
    }
}
