//! Molecule generation by sampling fragment connections.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fraglearn_chem::{parse_smiles, write_canonical, BondOrder, Molecule};

use crate::decompose::mfr_score;
use crate::error::{CoreError, Result};
use crate::fragment::{assemble, Fragment, Link};
use crate::qtable::{ConnectionKey, QTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Uniform choice among the `top_r` highest-weight partners.
    #[default]
    Ran,
    /// Choice proportional to `weight^(1/temperature)` over all partners.
    Bal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub strategy: Strategy,
    pub top_r: usize,
    pub temperature: f64,
    pub max_fragments: usize,
    pub rng_seed: u64,
    pub batch_size: usize,
    /// Unseen pairings and weak entries are floored at epsilon. When off,
    /// only materialized entries with positive score are candidates.
    pub epsilon_floor: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            strategy: Strategy::Ran,
            top_r: 10,
            temperature: 1.0,
            max_fragments: 12,
            rng_seed: 0,
            batch_size: 1000,
            epsilon_floor: true,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_r == 0 {
            return Err(CoreError::Config("top_r must be >= 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CoreError::Config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if self.max_fragments == 0 {
            return Err(CoreError::Config("max_fragments must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedMolecule {
    pub molecule: Molecule,
    pub smiles: String,
    pub connections_used: Vec<ConnectionKey>,
    pub fragment_count: usize,
    pub seed_fragment: String,
    /// Sites that had no compatible partner and were capped with hydrogen.
    pub dead_ends: usize,
    /// Fragments in assembly order, and the links between them.
    pub fragments: Vec<String>,
    pub links: Vec<Link>,
}

/// Sampling tables for one vocabulary and one table snapshot.
#[derive(Debug, Clone)]
pub struct SamplingIndex {
    vocab: Vec<Fragment>,
    /// Global site id of `(fragment, site)` is `site_base[fragment] + site`.
    site_base: Vec<usize>,
    site_owner: Vec<(usize, usize)>,
    /// Per site: compatible partners sorted by weight (desc), then id.
    candidates: Vec<Vec<(usize, f64)>>,
    /// Per site: cumulative `weight^(1/T)` over `candidates`.
    tempered: Vec<Vec<f64>>,
    seed_cumulative: Vec<f64>,
}

impl SamplingIndex {
    pub fn new(q: &QTable, vocab: &[Fragment], cfg: &GenerationConfig) -> Result<Self> {
        cfg.validate()?;
        if vocab.is_empty() {
            return Err(CoreError::EmptyVocabulary);
        }
        let vocab = vocab.to_vec();
        let mut site_base = Vec::with_capacity(vocab.len());
        let mut site_owner = Vec::new();
        let mut lookup: HashMap<(&str, usize), usize> = HashMap::new();
        for (f, frag) in vocab.iter().enumerate() {
            site_base.push(site_owner.len());
            for s in 0..frag.num_sites() {
                lookup.insert((frag.key(), s), site_owner.len());
                site_owner.push((f, s));
            }
        }
        let n = site_owner.len();
        let eps = q.epsilon();
        let orders: Vec<BondOrder> = site_owner.iter().map(|&(f, s)| vocab[f].sites()[s].order).collect();
        let mut learned: HashMap<(usize, usize), f64> = HashMap::new();
        for (key, entry) in q.entries() {
            if let (Some(&x), Some(&y)) = (lookup.get(&(key.a.as_str(), key.site_a)), lookup.get(&(key.b.as_str(), key.site_b))) {
                learned.insert((x, y), entry.q);
                learned.insert((y, x), entry.q);
            }
        }
        let mut candidates = Vec::with_capacity(n);
        for x in 0..n {
            let mut list: Vec<(usize, f64)> = (0..n)
                .filter(|&y| orders[y] == orders[x])
                .filter_map(|y| match (learned.get(&(x, y)), cfg.epsilon_floor) {
                    (Some(&w), true) => Some((y, w.max(eps))),
                    (None, true) => Some((y, eps)),
                    (Some(&w), false) if w > 0.0 => Some((y, w)),
                    _ => None,
                })
                .filter(|&(_, w)| w > 0.0)
                .collect();
            list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            candidates.push(list);
        }
        let inv_t = 1.0 / cfg.temperature;
        let tempered = candidates
            .iter()
            .map(|list| {
                let mut acc = 0.0;
                list.iter()
                    .map(|&(_, w)| {
                        acc += w.powf(inv_t);
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut acc = 0.0;
        let seed_cumulative = vocab
            .iter()
            .map(|f| {
                acc += mfr_score(f, q).max(eps).max(f64::MIN_POSITIVE);
                acc
            })
            .collect();
        Ok(SamplingIndex { vocab, site_base, site_owner, candidates, tempered, seed_cumulative })
    }

    pub fn vocab(&self) -> &[Fragment] {
        &self.vocab
    }

    /// Compatible partners of `(fragment, site)` with their weights, best first.
    pub fn partners(&self, fragment: usize, site: usize) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.candidates[self.site_base[fragment] + site].iter().map(|&(y, w)| (self.site_owner[y], w))
    }

    fn pick_seed<R: Rng>(&self, rng: &mut R) -> usize {
        pick_cumulative(&self.seed_cumulative, rng)
    }

    fn pick_partner<R: Rng>(&self, site: usize, cfg: &GenerationConfig, rng: &mut R) -> Option<usize> {
        let list = &self.candidates[site];
        if list.is_empty() {
            return None;
        }
        let chosen = match cfg.strategy {
            Strategy::Ran => pick_top_r(list, cfg.top_r, rng),
            Strategy::Bal => pick_cumulative(&self.tempered[site], rng),
        };
        Some(list[chosen].0)
    }
}

fn pick_cumulative<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let x = rng.gen::<f64>() * total;
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

/// Uniform over the `r` best entries of a list sorted by weight (desc). When
/// the r-th weight is tied with entries beyond position r, each tied entry is
/// equally likely to fill the remaining slots.
fn pick_top_r<R: Rng>(list: &[(usize, f64)], r: usize, rng: &mut R) -> usize {
    if list.len() <= r {
        return rng.gen_range(0..list.len());
    }
    let boundary = list[r - 1].1;
    let above = list.iter().take_while(|e| e.1 > boundary).count();
    let tied = list[above..].iter().take_while(|e| e.1 == boundary).count();
    if rng.gen_range(0..r) < above {
        rng.gen_range(0..above)
    } else {
        above + rng.gen_range(0..tied)
    }
}

/// Builds one molecule. Open sites are filled breadth first; sites left open at
/// the fragment cap or without partners are capped with hydrogen.
pub fn generate_one<R: Rng>(index: &SamplingIndex, cfg: &GenerationConfig, rng: &mut R) -> GeneratedMolecule {
    let seed = index.pick_seed(rng);
    let mut parts = vec![seed];
    let mut links = Vec::new();
    let mut connections = Vec::new();
    let mut dead_ends = 0;
    let mut open: VecDeque<(usize, usize)> = (0..index.vocab[seed].num_sites()).map(|s| (0, s)).collect();
    while let Some((part, site)) = open.pop_front() {
        if parts.len() >= cfg.max_fragments {
            continue;
        }
        let frag = parts[part];
        let Some(partner) = index.pick_partner(index.site_base[frag] + site, cfg, rng) else {
            dead_ends += 1;
            continue;
        };
        let (other, other_site) = index.site_owner[partner];
        let new_part = parts.len();
        parts.push(other);
        links.push(Link { part_a: part, site_a: site, part_b: new_part, site_b: other_site });
        connections.push(ConnectionKey::new(index.vocab[frag].key(), site, index.vocab[other].key(), other_site));
        open.extend((0..index.vocab[other].num_sites()).filter(|&s| s != other_site).map(|s| (new_part, s)));
    }
    let refs: Vec<&Fragment> = parts.iter().map(|&f| &index.vocab[f]).collect();
    let assembled = assemble(&refs, &links, true).expect("compatible sites always assemble");
    let smiles = write_canonical(&assembled).into_string();
    let molecule = parse_smiles(&smiles).unwrap_or_else(|e| panic!("generated {smiles} does not re-parse: {e}"));
    GeneratedMolecule {
        molecule,
        smiles,
        connections_used: connections,
        fragment_count: parts.len(),
        seed_fragment: index.vocab[seed].key().to_string(),
        dead_ends,
        fragments: refs.iter().map(|f| f.key().to_string()).collect(),
        links,
    }
}

/// Seed for item `i` of a batch (splitmix64 of the pair).
pub fn item_seed(batch_seed: u64, i: u64) -> u64 {
    let mut z = batch_seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn generate_item(index: &SamplingIndex, cfg: &GenerationConfig, i: usize) -> GeneratedMolecule {
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(cfg.rng_seed, i as u64));
    generate_one(index, cfg, &mut rng)
}

/// `cfg.batch_size` independent generations, run in parallel; item `i` depends
/// only on `(cfg.rng_seed, i)`.
pub fn generate_batch(q: &QTable, vocab: &[Fragment], cfg: &GenerationConfig) -> Result<Vec<GeneratedMolecule>> {
    if cfg.batch_size == 0 {
        return Ok(Vec::new());
    }
    let index = SamplingIndex::new(q, vocab, cfg)?;
    Ok((0..cfg.batch_size).into_par_iter().map(|i| generate_item(&index, cfg, i)).collect())
}

/// Sorts by score (desc) then canonical SMILES and keeps the first `top_n`.
pub fn rank_by<F>(batch: &[GeneratedMolecule], top_n: usize, score: F) -> Vec<(GeneratedMolecule, f64)>
where
    F: Fn(&Molecule) -> f64 + Sync,
{
    let scores: Vec<f64> = batch.par_iter().map(|g| score(&g.molecule)).collect();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| batch[a].smiles.cmp(&batch[b].smiles)));
    order.into_iter().take(top_n).map(|i| (batch[i].clone(), scores[i])).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRecord {
    pub smiles: String,
    pub connections_used: Vec<ConnectionKey>,
    pub fragment_count: usize,
    pub seed_fragment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl From<&GeneratedMolecule> for BatchRecord {
    fn from(g: &GeneratedMolecule) -> Self {
        BatchRecord {
            smiles: g.smiles.clone(),
            connections_used: g.connections_used.clone(),
            fragment_count: g.fragment_count,
            seed_fragment: g.seed_fragment.clone(),
            score: None,
        }
    }
}

/// Sidecar describing a generated batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub seed: u64,
    pub strategy: Strategy,
    pub molecules: Vec<BatchRecord>,
}
