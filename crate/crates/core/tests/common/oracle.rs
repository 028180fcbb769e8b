//! Independent reference implementations used by the integration tests.

use std::collections::BTreeSet;

use fraglearn_chem::{Fingerprint, Molecule};
use fraglearn_core::{apply_cuts, cuttable_bonds, ConnectionKey, Fragment, QTable};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fragment score recomputed from the full entry list.
pub fn fragment_score(f: &Fragment, q: &QTable) -> f64 {
    let mut total = 0.0;
    let mut covered = vec![false; f.num_sites()];
    for (key, entry) in q.entries() {
        if key.a == f.key() || key.b == f.key() {
            total += entry.q;
        }
        if key.a == f.key() {
            covered[key.site_a] = true;
        }
        if key.b == f.key() {
            covered[key.site_b] = true;
        }
    }
    total + q.epsilon() * covered.iter().filter(|c| !**c).count() as f64
}

/// Brute-force argmax over every subset of cuttable bonds: best score, then
/// fewest cuts, then smallest sorted key list.
pub fn argmax_decomposition(m: &Molecule, q: &QTable) -> (BTreeSet<usize>, Vec<String>) {
    let bonds: Vec<usize> = cuttable_bonds(m).into_iter().collect();
    let mut scored = Vec::new();
    for mask in 0u32..(1 << bonds.len()) {
        let cuts: BTreeSet<usize> = (0..bonds.len()).filter(|i| mask >> i & 1 == 1).map(|i| bonds[i]).collect();
        let d = apply_cuts(m, &cuts).unwrap();
        let score: f64 = d.fragments.iter().map(|f| fragment_score(f, q)).sum();
        let mut keys: Vec<String> = d.fragments.iter().map(|f| f.key().to_string()).collect();
        keys.sort();
        scored.push((score, cuts, keys));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    scored
        .into_iter()
        .filter(|s| best - s.0 < 1e-9)
        .min_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.2.cmp(&b.2)))
        .map(|(_, c, k)| (c, k))
        .unwrap()
}

/// Jaccard distance from explicit bit lists.
pub fn distance(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let sa: BTreeSet<usize> = a.ones().collect();
    let sb: BTreeSet<usize> = b.ones().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - sa.intersection(&sb).count() as f64 / union as f64
}

pub fn diversity(fps: &[Fingerprint]) -> f64 {
    let n = fps.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += distance(&fps[i], &fps[j]);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn chamfer(gen: &[Fingerprint], reference: &[Fingerprint]) -> f64 {
    let mut total = 0.0;
    for g in gen {
        let mut best = f64::INFINITY;
        for r in reference {
            best = best.min(distance(g, r));
        }
        total += best;
    }
    total / gen.len() as f64
}

pub fn random_key(rng: &mut ChaCha8Rng) -> ConnectionKey {
    const FRAGS: &[&str] = &["[*:1]C", "[*:1]CC[*:2]", "[*:1]O", "[*:1]c1ccccc1", "[*:1]C(=O)O[*:2]", "[*:1]N([*:2])[*:3]"];
    let a = FRAGS[rng.gen_range(0..FRAGS.len())];
    let b = FRAGS[rng.gen_range(0..FRAGS.len())];
    ConnectionKey::new(a, rng.gen_range(0..3), b, rng.gen_range(0..3))
}
