//! Canonical SMILES.
//!
//! Atoms are partitioned by invariants (element, aromaticity, charge, degree,
//! hydrogen count, ring membership, atom class) and the partition is refined
//! with neighbour classes and bond orders until stable. Remaining ties are
//! broken by individualizing each member of the first tied class in turn and
//! recursing; the lexicographically smallest SMILES over all leaves wins.
//! Interchangeable terminal "twin" atoms are explored once.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::molecule::Molecule;
use crate::smiles::writer::write_ranked;

/// SMILES text produced by [`write_canonical`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalSmiles(String);

impl CanonicalSmiles {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalSmiles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalSmiles {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn write_canonical(mol: &Molecule) -> CanonicalSmiles {
    CanonicalSmiles(canonical_form(mol).0)
}

/// Position of every atom in the canonical SMILES string (0 = written first).
pub fn canonical_ranking(mol: &Molecule) -> Vec<usize> {
    let (_, order) = canonical_form(mol);
    let mut rank = vec![0; order.len()];
    for (pos, &atom) in order.iter().enumerate() {
        rank[atom] = pos;
    }
    rank
}

pub(crate) fn canonical_form(mol: &Molecule) -> (String, Vec<usize>) {
    let initial = initial_classes(mol);
    let mut best: Option<(String, Vec<usize>)> = None;
    search(mol, initial, &mut best);
    best.expect("search visits at least one leaf")
}

fn initial_classes(mol: &Molecule) -> Vec<usize> {
    let keys: Vec<_> = (0..mol.num_atoms())
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element.atomic_number(),
                a.aromatic,
                a.charge,
                mol.degree(i),
                a.hydrogens,
                mol.is_ring_atom(i),
                a.map,
            )
        })
        .collect();
    dense_rank(&keys)
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("key present")).collect()
}

fn class_count(classes: &[usize]) -> usize {
    classes.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(mol: &Molecule, mut classes: Vec<usize>) -> Vec<usize> {
    let mut count = class_count(&classes);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.num_atoms())
            .map(|i| {
                let mut env: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (classes[n], mol.bond(b).order.code()))
                    .collect();
                env.sort_unstable();
                (classes[i], env)
            })
            .collect();
        let next = dense_rank(&keys);
        let next_count = class_count(&next);
        classes = next;
        if next_count == count {
            return classes;
        }
        count = next_count;
    }
}

fn are_twins(mol: &Molecule, u: usize, v: usize) -> bool {
    let env = |x: usize, other: usize| {
        let mut e: Vec<(usize, u8)> = mol
            .neighbors(x)
            .iter()
            .filter(|&&(n, _)| n != other)
            .map(|&(n, b)| (n, mol.bond(b).order.code()))
            .collect();
        e.sort_unstable();
        e
    };
    env(u, v) == env(v, u)
}

fn search(mol: &Molecule, classes: Vec<usize>, best: &mut Option<(String, Vec<usize>)>) {
    let classes = refine(mol, classes);
    let n = mol.num_atoms();
    let count = class_count(&classes);
    if count == n {
        let (text, order) = write_ranked(mol, &classes);
        if best.as_ref().is_none_or(|(b, _)| text < *b) {
            *best = Some((text, order));
        }
        return;
    }
    let mut sizes = vec![0usize; count];
    for &c in &classes {
        sizes[c] += 1;
    }
    let target = (0..count).find(|&c| sizes[c] > 1).expect("a tied class exists");
    let members: Vec<usize> = (0..n).filter(|&i| classes[i] == target).collect();
    let mut representatives: Vec<usize> = Vec::new();
    for &m in &members {
        if !representatives.iter().any(|&r| are_twins(mol, r, m)) {
            representatives.push(m);
        }
    }
    for rep in representatives {
        let split: Vec<usize> = (0..n)
            .map(|i| {
                let base = classes[i] * 2;
                if classes[i] == target && i != rep {
                    base + 1
                } else {
                    base
                }
            })
            .collect();
        search(mol, densify(split), best);
    }
}

fn densify(classes: Vec<usize>) -> Vec<usize> {
    dense_rank(&classes)
}
