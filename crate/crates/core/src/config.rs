//! Declarative run configuration. Every field maps onto a typed config of
//! another module; missing fields take the documented defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::aligner::AlignConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::io::DatasetLayout;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    /// Average G1 -> G2 and G2 -> G1 rankings.
    pub bidirectional: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 10],
            bidirectional: false,
        }
    }
}

/// Model, training and evaluation knobs of one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub align: AlignConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.train.validate()?;
        self.align.validate()?;
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(Error::Config("eval.ks must list positive cutoffs".into()));
        }
        Ok(())
    }
}

/// A complete run: where the data lives, how to model it, where to write.
/// Serialized as one TOML document with `[dataset]`, `[encoder]`, `[train]`,
/// `[align]` and `[eval]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Single worker thread and no wall-clock fields, for byte-identical
    /// artifacts.
    #[serde(default)]
    pub deterministic: bool,
    pub dataset: DatasetLayout,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub align: AlignConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            encoder: self.encoder.clone(),
            train: self.train.clone(),
            align: self.align.clone(),
            eval: self.eval.clone(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
