//! Run configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decompose::DecompositionConfig;
use crate::error::{CoreError, Result};
use crate::generator::GenerationConfig;
use crate::metrics::MetricsConfig;
use crate::objective::ObjectiveSpec;
use crate::qtable::{QParams, UpdateMode};
use crate::tuning::TuningConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    /// Name of a shipped membership class, or a path to a class file.
    pub membership: Option<String>,
    /// Datasets larger than this are trained in random mini-batches of this size.
    pub max_batch: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { train: None, membership: None, max_batch: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QLearnConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub mode: UpdateMode,
    pub r_recon: f64,
    /// Molecules sampled per epoch for individual and group rewards.
    pub samples_per_epoch: usize,
    /// Entries with at least this many visits and a score below `prune_q_min`
    /// are dropped after each epoch.
    pub prune_min_visits: Option<u64>,
    pub prune_q_min: f64,
}

impl Default for QLearnConfig {
    fn default() -> Self {
        let p = QParams::default();
        QLearnConfig {
            epsilon: p.epsilon,
            alpha: p.alpha,
            mode: p.mode,
            r_recon: p.r_recon,
            samples_per_epoch: 256,
            prune_min_visits: None,
            prune_q_min: 0.01,
        }
    }
}

impl QLearnConfig {
    pub fn params(&self) -> QParams {
        QParams { epsilon: self.epsilon, alpha: self.alpha, mode: self.mode, r_recon: self.r_recon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// `empty`, `drug_like` or `monomer`; ignored when `terms` is non-empty.
    pub preset: String,
    pub terms: Vec<crate::objective::ObjectiveTerm>,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig { preset: "monomer".into(), terms: Vec::new() }
    }
}

impl ObjectiveConfig {
    pub fn spec(&self) -> Result<ObjectiveSpec> {
        let spec = if self.terms.is_empty() {
            ObjectiveSpec::preset(&self.preset)?
        } else {
            ObjectiveSpec { version: 0, terms: self.terms.clone() }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundConfig {
    /// Molecules generated per round.
    pub generate: usize,
    /// Ranked molecules kept for review.
    pub top_n: usize,
    /// Ranked molecules the simulated reviewer inspects.
    pub review_top: usize,
    /// Training epochs run before each round's generation.
    pub epochs_per_round: usize,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig { generate: 10_000, top_n: 100, review_top: 50, epochs_per_round: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub bind: String,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig { bind: "127.0.0.1:8080".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub data: DataConfig,
    pub decomposition: DecompositionConfig,
    pub qlearn: QLearnConfig,
    pub generation: GenerationConfig,
    pub objective: ObjectiveConfig,
    pub metrics: MetricsConfig,
    pub tuning: TuningConfig,
    pub round: RoundConfig,
    pub serve: ServeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            epochs: 50,
            data: DataConfig::default(),
            decomposition: DecompositionConfig::default(),
            qlearn: QLearnConfig::default(),
            generation: GenerationConfig::default(),
            objective: ObjectiveConfig::default(),
            metrics: MetricsConfig::default(),
            tuning: TuningConfig::default(),
            round: RoundConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.decomposition.validate()?;
        self.qlearn.params().validate()?;
        self.generation.validate()?;
        self.objective.spec()?;
        self.tuning.validate()?;
        if self.data.max_batch == 0 {
            return Err(CoreError::Config("data.max_batch must be >= 1".into()));
        }
        if self.round.top_n > self.round.generate {
            return Err(CoreError::Config("round.top_n exceeds round.generate".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        digest_json(&serde_json::to_value(self).expect("config serializes"))
    }
}

/// SHA-256 (hex) of a JSON value written with sorted object keys.
pub fn digest_json(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(&sorted(value)).expect("json serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn sorted(value: &serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(map) => {
            let mut entries: Vec<(&String, &serde_json::Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            serde_json::Value::Object(entries.into_iter().map(|(k, v)| (k.clone(), sorted(v))).collect())
        }
        serde_json::Value::Array(items) => serde_json::Value::Array(items.iter().map(sorted).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn sections_are_optional() {
        let cfg = RunConfig::from_toml("seed = 7\n[generation]\nstrategy = \"bal\"\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.generation.top_r, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[generation]\ntop_k = 3\n").is_err());
        assert!(RunConfig::from_toml("[qlearn]\nalpha = 0.0\n").is_err());
    }
}
