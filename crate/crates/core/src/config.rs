//! Merged run configuration for the command-line tool.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curation::{ScorerSpec, SelectionConfig};
use crate::error::{Error, Result};
use crate::toy::TrainConfig;

/// Everything a subcommand may need. Frequency weighting and Beta parameters
/// live under `train` (`train.freq_reg`, `train.dots`) and are shared by
/// `freq-analyze` and `dots-sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads for image decoding and metrics; `null` means one per core.
    pub workers: Option<usize>,
    pub root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub captions: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub selection: SelectionConfig,
    pub scorer: Option<ScorerSpec>,
    pub train: TrainConfig,
    pub seeds: usize,
    pub samples: usize,
    pub histogram: Option<usize>,
    /// Images per appended chunk during `metrics`.
    pub chunk_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: None,
            root: None,
            manifest: None,
            out: None,
            captions: None,
            input: None,
            reference: None,
            selection: SelectionConfig::default(),
            scorer: None,
            train: TrainConfig::default(),
            seeds: 10,
            samples: 10_000,
            histogram: None,
            chunk_size: 32,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("seeds must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.histogram == Some(0) {
            return Err(Error::invalid("histogram needs at least 1 bin"));
        }
        if self.chunk_size == 0 {
            return Err(Error::invalid("chunk_size must be at least 1"));
        }
        self.selection.validate()?;
        self.train.validate()
    }

    pub fn effective_workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}
