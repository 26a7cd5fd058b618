//! Experiment configuration: one strict JSON document shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pansharp_core::metrics::MetricConventions;
use pansharp_core::msdcnn::{preset, NetworkSpec, PRESETS};
use pansharp_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub name: String,
    pub ms: PathBuf,
    pub pan: PathBuf,
}

/// Procedurally generated scenes used when no real imagery is supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub count: usize,
    /// MS height; PAN is `ratio` times larger.
    pub height: usize,
    pub width: usize,
    pub bands: usize,
}

impl Default for SyntheticData {
    fn default() -> Self {
        Self {
            count: 1,
            height: 64,
            width: 64,
            bands: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub scenes: Vec<SceneEntry>,
    pub synthetic: Option<SyntheticData>,
    pub ratio: usize,
    pub patch: usize,
    pub stride: usize,
    /// Keep a seeded random subset of at most this many patches.
    pub max_patches: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            scenes: Vec::new(),
            synthetic: None,
            ratio: 4,
            patch: 41,
            stride: 14,
            max_patches: None,
        }
    }
}

/// A preset name or an inline layer list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkChoice {
    Preset(String),
    Inline(NetworkSpec),
}

impl Default for NetworkChoice {
    fn default() -> Self {
        NetworkChoice::Preset("msdcnn-default".into())
    }
}

impl NetworkChoice {
    pub fn resolve(&self, bands: usize) -> Result<NetworkSpec> {
        match self {
            NetworkChoice::Preset(name) => preset(name, bands).with_context(|| {
                format!(
                    "unknown network preset {name:?}; known: {}",
                    PRESETS.join(", ")
                )
            }),
            NetworkChoice::Inline(spec) => {
                spec.validate()?;
                if spec.bands != bands {
                    bail!(
                        "network spec is for {} bands but the data has {bands}",
                        spec.bands
                    );
                }
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub network: NetworkChoice,
    pub train: TrainConfig,
    pub eval: MetricConventions,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Apply command-line overrides and propagate the master seed.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.train.seed = self.seed;
        self.train.validate()?;
        let d = &self.data;
        if d.ratio < 2 {
            bail!("data.ratio must be at least 2");
        }
        if d.patch == 0 || d.stride == 0 {
            bail!("data.patch and data.stride must be positive");
        }
        Ok(self)
    }

    /// Write the resolved configuration, defaults included.
    pub fn echo(&self, dir: &Path, name: &str) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
