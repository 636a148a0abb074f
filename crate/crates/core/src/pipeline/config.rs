use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cat::CatConfig;
use crate::classifier::{HyperGrid, TrainConfig};
use crate::dataprep::{CodingSpec, Schema};
use crate::irt::{FitConfig, ModelKind};
use crate::{ClassLabel, Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// A coding spec given either as a path to a JSON file or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodingSource {
    Path(PathBuf),
    Inline(CodingSpec),
}

/// Everything a pipeline run needs. Relative `data` and coding paths are
/// resolved against the directory of the config file by [`RunConfig::load`].
/// The single `seed` drives every stochastic stage; seeds inside `fit` and
/// `cat` are overwritten with values derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub data: PathBuf,
    pub schema: Schema,
    pub coding: CodingSource,
    #[serde(default = "default_kind")]
    pub model_kind: ModelKind,
    #[serde(default = "default_true")]
    pub balance: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub grid: HyperGrid,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub cat: CatConfig,
    #[serde(default = "default_positive")]
    pub positive_class: ClassLabel,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn default_kind() -> ModelKind {
    ModelKind::Graded
}
fn default_true() -> bool {
    true
}
fn default_folds() -> usize {
    5
}
fn default_positive() -> ClassLabel {
    ClassLabel::Class2
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// A config with default settings for `data` described by `schema`.
    pub fn new(data: impl Into<PathBuf>, schema: Schema, coding: CodingSource) -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            data: data.into(),
            schema,
            coding,
            model_kind: default_kind(),
            balance: true,
            seed: 0,
            fit: FitConfig::default(),
            grid: HyperGrid::default(),
            folds: default_folds(),
            train: TrainConfig::default(),
            cat: CatConfig::default(),
            positive_class: default_positive(),
            out_dir: default_out_dir(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::json("run config", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&s)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.data.is_relative() {
            cfg.data = base.join(&cfg.data);
        }
        if let CodingSource::Path(p) = &mut cfg.coding {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("run config", e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported config schema version {}", self.schema_version)));
        }
        if self.schema.features.is_empty() {
            return Err(Error::Config("schema lists no features".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        self.fit.validate()?;
        self.grid.validate()?;
        self.cat.validate()?;
        if let CodingSource::Inline(spec) = &self.coding {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn coding_spec(&self) -> Result<CodingSpec> {
        match &self.coding {
            CodingSource::Inline(spec) => Ok(spec.clone()),
            CodingSource::Path(p) => CodingSpec::load(p),
        }
    }
}
