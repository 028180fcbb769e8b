//! Training epochs and persistent run state.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fraglearn_chem::{is_isomorphic, Molecule};

use crate::config::{digest_json, RunConfig};
use crate::decompose::{decompose_with_rng, DecompositionConfig};
use crate::error::{CoreError, Result};
use crate::fragment::{Decomposition, Fragment};
use crate::generator::{generate_batch, item_seed, GeneratedMolecule, GenerationConfig};
use crate::objective::{ObjectiveSpec, Scorer};
use crate::proxies::PropertyProvider;
use crate::qtable::{decomposition_keys, ConnectionKey, QTable};

pub const STATE_FORMAT_VERSION: u32 = 1;

/// Metrics recorded after each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub molecules: usize,
    pub vocabulary: usize,
    pub new_fragments: usize,
    pub table_entries: usize,
    pub mean_cuts: f64,
    pub mean_q: f64,
    pub samples: usize,
    pub unique_samples: usize,
    pub mean_individual: f64,
    pub mean_group: f64,
}

impl EpochMetrics {
    pub const CSV_HEADER: &'static str =
        "epoch,molecules,vocabulary,new_fragments,table_entries,mean_cuts,mean_q,samples,unique_samples,mean_individual,mean_group";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub epoch: u64,
    pub qtable: QTable,
    /// Occurrences of each fragment across all epochs.
    pub vocabulary: BTreeMap<String, u64>,
    /// Fragments of the latest epoch's decompositions; generation draws from these.
    pub active: Vec<String>,
    pub spec: ObjectiveSpec,
    pub history: Vec<EpochMetrics>,
}

impl RunState {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(RunState {
            version: STATE_FORMAT_VERSION,
            config_digest: cfg.digest(),
            seed: cfg.seed,
            epoch: 0,
            qtable: QTable::new(cfg.qlearn.params()),
            vocabulary: BTreeMap::new(),
            active: Vec::new(),
            spec: cfg.objective.spec()?,
            history: Vec::new(),
        })
    }

    /// SHA-256 over the canonical JSON form of the whole state.
    pub fn digest(&self) -> String {
        digest_json(&serde_json::to_value(self).expect("state serializes"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CoreError::io(path, e))
    }

    pub fn restore(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CoreError::format(path, e))?;
        let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != STATE_FORMAT_VERSION {
            return Err(CoreError::FormatVersionMismatch { expected: STATE_FORMAT_VERSION, found });
        }
        serde_json::from_value(value).map_err(|e| CoreError::format(path, e))
    }

    /// Fragments generation draws from.
    pub fn active_fragments(&self) -> Result<Vec<Fragment>> {
        self.active.iter().map(|k| Fragment::from_key(k)).collect()
    }

    /// All fragments seen so far.
    pub fn all_fragments(&self) -> Result<Vec<Fragment>> {
        self.vocabulary.keys().map(|k| Fragment::from_key(k)).collect()
    }
}

/// Everything an epoch reads besides the state.
pub struct Trainer<'a> {
    pub config: &'a RunConfig,
    pub dataset: &'a [Molecule],
    pub provider: &'a dyn PropertyProvider,
}

fn epoch_seed(seed: u64, epoch: u64, stream: u64) -> u64 {
    item_seed(item_seed(seed, epoch), stream)
}

impl Trainer<'_> {
    fn batch_indices(&self, epoch: u64) -> Vec<usize> {
        let n = self.dataset.len();
        let max = self.config.data.max_batch;
        if n <= max {
            return (0..n).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(self.config.seed, epoch, 1));
        let mut idx = sample(&mut rng, n, max).into_vec();
        idx.sort_unstable();
        idx
    }

    /// Decomposes the given molecules against a read-only table.
    pub fn decompose_all(&self, q: &QTable, indices: &[usize], epoch: u64, cfg: &DecompositionConfig) -> Result<Vec<Decomposition>> {
        indices
            .par_iter()
            .map(|&i| {
                let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(self.config.seed, epoch, 1000 + i as u64));
                decompose_with_rng(&self.dataset[i], q, cfg, &mut rng)
            })
            .collect()
    }

    /// Runs one epoch: decompose, register fragments, reward reconstruction,
    /// sample, score and distribute rewards.
    pub fn train_epoch(&self, state: &mut RunState) -> Result<()> {
        if self.dataset.is_empty() {
            return Err(CoreError::EmptyBatch);
        }
        let epoch = state.epoch + 1;
        let indices = self.batch_indices(epoch);
        let decomps = self.decompose_all(&state.qtable, &indices, epoch, &self.config.decomposition)?;
        for d in &decomps {
            let rebuilt = d.reassemble()?;
            if !is_isomorphic(&rebuilt, &d.source) {
                return Err(CoreError::InvalidFragment {
                    key: d.sorted_keys().join("."),
                    reason: "decomposition does not reassemble to its source".into(),
                });
            }
        }
        let mut active: BTreeMap<String, Fragment> = BTreeMap::new();
        for d in &decomps {
            for f in &d.fragments {
                *state.vocabulary.entry(f.key().to_string()).or_insert(0) += 1;
                active.entry(f.key().to_string()).or_insert_with(|| f.clone());
            }
        }
        let new_fragments = state.qtable.insert_fragments(active.values());
        let r_recon = state.qtable.params().r_recon;
        for d in &decomps {
            state.qtable.reward_reconstruction(d, r_recon);
        }
        state.active = active.keys().cloned().collect();
        let vocab: Vec<Fragment> = active.into_values().collect();

        let samples = if state.spec.is_inert() { 0 } else { self.config.qlearn.samples_per_epoch };
        let (mut mean_individual, mut mean_group, mut unique_samples) = (0.0, 0.0, 0);
        if samples > 0 {
            let gen_cfg = GenerationConfig { batch_size: samples, rng_seed: epoch_seed(self.config.seed, epoch, 2), ..self.config.generation };
            let batch = generate_batch(&state.qtable, &vocab, &gen_cfg)?;
            let (individual, group) = reward_batch(&batch, &state.spec, self.provider)?;
            let pairs: Vec<(&[ConnectionKey], f64)> =
                batch.iter().zip(&individual).map(|(g, &r)| (g.connections_used.as_slice(), r)).collect();
            state.qtable.distribute_rewards(&pairs, &group)?;
            mean_individual = individual.iter().sum::<f64>() / samples as f64;
            mean_group = group.iter().sum::<f64>() / samples as f64;
            unique_samples = batch.iter().map(|g| g.smiles.as_str()).collect::<std::collections::BTreeSet<_>>().len();
        }
        if let Some(min_visits) = self.config.qlearn.prune_min_visits {
            state.qtable.prune(min_visits, self.config.qlearn.prune_q_min);
        }
        let entries = state.qtable.len();
        state.history.push(EpochMetrics {
            epoch,
            molecules: decomps.len(),
            vocabulary: state.vocabulary.len(),
            new_fragments,
            table_entries: entries,
            mean_cuts: decomps.iter().map(|d| d.cut_bonds.len()).sum::<usize>() as f64 / decomps.len() as f64,
            mean_q: if entries == 0 { 0.0 } else { state.qtable.entries().map(|(_, e)| e.q).sum::<f64>() / entries as f64 },
            samples,
            unique_samples,
            mean_individual,
            mean_group,
        });
        state.epoch = epoch;
        Ok(())
    }

    pub fn train(&self, state: &mut RunState, epochs: usize) -> Result<()> {
        for _ in 0..epochs {
            self.train_epoch(state)?;
        }
        Ok(())
    }

    /// Reconstruction rewards only: decompose every molecule once with
    /// exploration off and reward its connections.
    pub fn warm_start(&self, state: &mut RunState) -> Result<Vec<Decomposition>> {
        let cfg = DecompositionConfig { explore_prob: 0.0, ..self.config.decomposition };
        let indices: Vec<usize> = (0..self.dataset.len()).collect();
        let decomps = self.decompose_all(&state.qtable, &indices, state.epoch + 1, &cfg)?;
        let mut active = BTreeMap::new();
        for d in &decomps {
            for f in &d.fragments {
                *state.vocabulary.entry(f.key().to_string()).or_insert(0) += 1;
                active.entry(f.key().to_string()).or_insert_with(|| f.clone());
            }
        }
        state.qtable.insert_fragments(active.values());
        let r = state.qtable.params().r_recon;
        for d in &decomps {
            state.qtable.reward_reconstruction(d, r);
        }
        state.active = active.into_keys().collect();
        Ok(decomps)
    }
}

/// Individual and group rewards for a generated batch.
pub fn reward_batch(batch: &[GeneratedMolecule], spec: &ObjectiveSpec, provider: &dyn PropertyProvider) -> Result<(Vec<f64>, Vec<f64>)> {
    let scorer = Scorer::new(spec, provider)?;
    let individual: Vec<f64> = batch.par_iter().map(|g| scorer.score(&g.molecule)).collect();
    let mols: Vec<Molecule> = batch.iter().map(|g| g.molecule.clone()).collect();
    let group = scorer.score_group(&mols);
    Ok((individual, group))
}

/// Keys used by the given decompositions.
pub fn training_keys(decomps: &[Decomposition]) -> std::collections::BTreeSet<ConnectionKey> {
    decomps.iter().flat_map(decomposition_keys).collect()
}

/// Metrics history as CSV text.
pub fn metrics_csv(history: &[EpochMetrics]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for m in history {
        w.serialize(m).expect("metrics serialize");
    }
    if history.is_empty() {
        return format!("{}\n", EpochMetrics::CSV_HEADER);
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}
