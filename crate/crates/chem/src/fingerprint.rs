//! Circular (Morgan-style) fingerprints and Tanimoto similarity.

use serde::{Deserialize, Serialize};

use crate::error::ChemError;
use crate::molecule::Molecule;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_WIDTH: usize = 2048;

/// Fixed-width bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    width: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn new(width: usize) -> Self {
        assert!(width > 0, "fingerprint width must be positive");
        Fingerprint { width, words: vec![0; width.div_ceil(64)] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.width);
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.contains(b))
    }
}

/// 64-bit mixer (splitmix64 finalizer); stable across platforms and runs.
fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn combine(seed: u64, value: u64) -> u64 {
    mix(seed ^ value.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(seed << 6).wrapping_add(seed >> 2))
}

fn atom_invariant(mol: &Molecule, atom: usize) -> u64 {
    let a = mol.atom(atom);
    let fields = [
        a.element.atomic_number() as u64,
        mol.degree(atom) as u64,
        a.hydrogens as u64,
        (a.charge as i64 + 8) as u64,
        mol.is_ring_atom(atom) as u64,
        a.aromatic as u64,
    ];
    fields.iter().fold(0x51_7cc1_b727_220a, |h, &f| combine(h, f))
}

/// Morgan fingerprint: atom environments up to `radius` bonds, folded into
/// `width` bits.
pub fn morgan_fingerprint(mol: &Molecule, radius: usize, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::new(width);
    let mut ids: Vec<u64> = (0..mol.num_atoms()).map(|i| atom_invariant(mol, i)).collect();
    for &id in &ids {
        fp.set((id % width as u64) as usize);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..mol.num_atoms())
            .map(|i| {
                let mut env: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (mol.bond(b).order.code(), ids[n]))
                    .collect();
                env.sort_unstable();
                let mut h = combine(round as u64, ids[i]);
                for (code, id) in env {
                    h = combine(combine(h, code as u64), id);
                }
                h
            })
            .collect();
        for &id in &next {
            fp.set((id % width as u64) as usize);
        }
        ids = next;
    }
    fp
}

/// Tanimoto (Jaccard) similarity. Two empty fingerprints are identical (1.0).
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, ChemError> {
    if a.width != b.width {
        return Err(ChemError::WidthMismatch(a.width, b.width));
    }
    let mut both = 0u32;
    let mut either = 0u32;
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        return Ok(1.0);
    }
    Ok(both as f64 / either as f64)
}
