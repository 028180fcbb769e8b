//! Ranking-based choice among candidate decompositions.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use fraglearn_chem::Molecule;

use crate::error::{CoreError, Result};
use crate::fragment::{apply_cuts, cuttable_bonds, Decomposition, Fragment};
use crate::qtable::QTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreAggregate {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Candidate cut sets considered per molecule.
    pub k: usize,
    pub max_cuts: usize,
    pub explore_prob: f64,
    pub aggregate: ScoreAggregate,
    pub rng_seed: u64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig { k: 20, max_cuts: 4, explore_prob: 0.15, aggregate: ScoreAggregate::Sum, rng_seed: 0 }
    }
}

impl DecompositionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(CoreError::Config("decomposition k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.explore_prob) {
            return Err(CoreError::Config(format!("explore_prob must lie in [0, 1], got {}", self.explore_prob)));
        }
        Ok(())
    }
}

/// Sum of the scores of all entries touching the fragment, plus epsilon for
/// every site that has no entry yet.
pub fn mfr_score(fragment: &Fragment, q: &QTable) -> f64 {
    let mut total = 0.0;
    let mut covered = vec![false; fragment.num_sites()];
    for (key, entry) in q.entries_for(fragment.key()) {
        total += entry.q;
        for (s, flag) in covered.iter_mut().enumerate() {
            *flag |= key.uses_site(fragment.key(), s);
        }
    }
    total + q.epsilon() * covered.iter().filter(|c| !**c).count() as f64
}

/// Aggregated fragment scores, summed in key order so equal fragment
/// multisets score bit-identically.
pub fn decomposition_score(d: &Decomposition, q: &QTable, aggregate: ScoreAggregate) -> f64 {
    let mut scored: Vec<(&str, f64)> = d.fragments.iter().map(|f| (f.key(), mfr_score(f, q))).collect();
    scored.sort_by(|a, b| a.0.cmp(b.0));
    let sum: f64 = scored.iter().map(|(_, s)| s).sum();
    match aggregate {
        ScoreAggregate::Sum => sum,
        ScoreAggregate::Mean => sum / scored.len() as f64,
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn all_subsets(bonds: &[usize], max_size: usize) -> Vec<BTreeSet<usize>> {
    let n = bonds.len();
    let mut out: Vec<BTreeSet<usize>> = (0u64..1 << n)
        .filter(|mask| mask.count_ones() as usize <= max_size)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| bonds[i]).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Candidate cut sets: every subset when there are at most `k`, otherwise
/// `k` distinct subsets with sizes drawn uniformly from `0..=max_cuts`.
pub fn candidate_cut_sets<R: Rng>(mol: &Molecule, cfg: &DecompositionConfig, rng: &mut R) -> Vec<BTreeSet<usize>> {
    let bonds: Vec<usize> = cuttable_bonds(mol).into_iter().collect();
    let max_size = cfg.max_cuts.min(bonds.len());
    let total: u128 = (0..=max_size).map(|r| binomial(bonds.len(), r)).sum();
    if total <= cfg.k as u128 {
        return all_subsets(&bonds, max_size);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(cfg.k);
    let mut attempts = 0usize;
    while out.len() < cfg.k && attempts < cfg.k * 1000 {
        attempts += 1;
        let size = rng.gen_range(0..=max_size);
        let subset: BTreeSet<usize> = sample(rng, bonds.len(), size).into_iter().map(|i| bonds[i]).collect();
        if seen.insert(subset.clone()) {
            out.push(subset);
        }
    }
    out
}

/// Higher score first, then fewer cuts, then lexicographically smaller keys.
fn preference(a: &(f64, Decomposition), b: &(f64, Decomposition)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.cut_bonds.len().cmp(&b.1.cut_bonds.len()))
        .then_with(|| a.1.sorted_keys().cmp(&b.1.sorted_keys()))
}

/// The preferred decomposition among candidates; `None` for an empty list.
pub fn best_decomposition(candidates: Vec<Decomposition>, q: &QTable, aggregate: ScoreAggregate) -> Option<Decomposition> {
    candidates
        .into_iter()
        .map(|d| (decomposition_score(&d, q, aggregate), d))
        .min_by(preference)
        .map(|(_, d)| d)
}

pub fn decompose(mol: &Molecule, q: &QTable, cfg: &DecompositionConfig) -> Result<Decomposition> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    decompose_with_rng(mol, q, cfg, &mut rng)
}

pub fn decompose_with_rng<R: Rng>(mol: &Molecule, q: &QTable, cfg: &DecompositionConfig, rng: &mut R) -> Result<Decomposition> {
    cfg.validate()?;
    let cut_sets = candidate_cut_sets(mol, cfg, rng);
    let explore = cfg.explore_prob > 0.0 && rng.gen_bool(cfg.explore_prob);
    if explore {
        let pick = rng.gen_range(0..cut_sets.len());
        return apply_cuts(mol, &cut_sets[pick]);
    }
    let candidates = cut_sets.iter().map(|c| apply_cuts(mol, c)).collect::<Result<Vec<_>>>()?;
    Ok(best_decomposition(candidates, q, cfg.aggregate).expect("at least the empty cut set"))
}
