//! Drug-likeness and synthetic-accessibility proxies.
//!
//! Both are simple documented surrogates, not the published scores:
//!
//! * `qed` is the product of four desirability ramps over molecular weight,
//!   logP, donors and acceptors. Each ramp is 1 inside its preferred band,
//!   falls linearly to [`RAMP_FLOOR`] at its outer limits and stays there.
//! * `sa` maps a non-negative complexity value
//!   `0.04 * heavy_atoms + 0.35 * rings + 0.3 * charged_atoms + 1.5 * rarity`
//!   onto `[1, 10)` with `1 + 9 * (1 - exp(-raw / 3))`. `rarity` is the share of
//!   the molecule's radius-1 atom environments unseen in a reference set
//!   (0 when no reference set is given).

use std::collections::BTreeSet;

use fraglearn_chem::{morgan_fingerprint, properties, Molecule, PropertyVector};

pub const RAMP_FLOOR: f64 = 0.05;
const ENV_WIDTH: usize = 1 << 16;

/// Source of the drug-likeness and synthesizability scores used by objectives
/// and reports.
pub trait PropertyProvider: Send + Sync {
    /// In `[0, 1]`, higher is more drug-like.
    fn qed(&self, mol: &Molecule) -> f64;
    /// In `[1, 10]`, lower is easier to make.
    fn sa(&self, mol: &Molecule) -> f64;
}

/// `(zero_lo, full_lo, full_hi, zero_hi)`
type Band = (f64, f64, f64, f64);

const MW_BAND: Band = (50.0, 200.0, 400.0, 700.0);
const LOGP_BAND: Band = (-3.0, 0.0, 3.5, 6.5);
const HBD_BAND: Band = (-1.0, 0.0, 2.0, 6.0);
const HBA_BAND: Band = (-1.0, 1.0, 6.0, 12.0);

pub fn ramp(x: f64, (zero_lo, full_lo, full_hi, zero_hi): Band) -> f64 {
    let d = if x < full_lo {
        (x - zero_lo) / (full_lo - zero_lo)
    } else if x > full_hi {
        (zero_hi - x) / (zero_hi - full_hi)
    } else {
        1.0
    };
    RAMP_FLOOR + (1.0 - RAMP_FLOOR) * d.clamp(0.0, 1.0)
}

pub fn qed_from_properties(p: &PropertyVector) -> f64 {
    ramp(p.mol_weight, MW_BAND) * ramp(p.logp, LOGP_BAND) * ramp(p.hbd as f64, HBD_BAND) * ramp(p.hba as f64, HBA_BAND)
}

pub fn proxy_qed(mol: &Molecule) -> f64 {
    qed_from_properties(&properties(mol))
}

pub fn sa_from_raw(raw: f64) -> f64 {
    1.0 + 9.0 * (1.0 - (-raw.max(0.0) / 3.0).exp())
}

fn complexity(mol: &Molecule, rarity: f64) -> f64 {
    let charged = mol.atoms().iter().filter(|a| a.charge != 0).count();
    0.04 * mol.heavy_atom_count() as f64 + 0.35 * mol.ring_count() as f64 + 0.3 * charged as f64 + 1.5 * rarity
}

pub fn proxy_sa(mol: &Molecule) -> f64 {
    sa_from_raw(complexity(mol, 0.0))
}

/// Default provider; optionally aware of a reference set for the rarity term.
#[derive(Debug, Clone, Default)]
pub struct ProxyProvider {
    environments: Option<BTreeSet<usize>>,
}

impl ProxyProvider {
    pub fn new() -> Self {
        ProxyProvider::default()
    }

    pub fn with_reference(reference: &[Molecule]) -> Self {
        let environments = reference.iter().flat_map(|m| morgan_fingerprint(m, 1, ENV_WIDTH).ones().collect::<Vec<_>>()).collect();
        ProxyProvider { environments: Some(environments) }
    }

    pub fn rarity(&self, mol: &Molecule) -> f64 {
        let Some(known) = &self.environments else { return 0.0 };
        let fp = morgan_fingerprint(mol, 1, ENV_WIDTH);
        let total = fp.count_ones();
        if total == 0 {
            return 0.0;
        }
        fp.ones().filter(|b| !known.contains(b)).count() as f64 / total as f64
    }
}

impl PropertyProvider for ProxyProvider {
    fn qed(&self, mol: &Molecule) -> f64 {
        proxy_qed(mol)
    }

    fn sa(&self, mol: &Molecule) -> f64 {
        sa_from_raw(complexity(mol, self.rarity(mol)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraglearn_chem::parse_smiles;

    #[test]
    fn preferred_band_scores_one() {
        assert_eq!(qed_from_properties(&PropertyVector::new(250.0, 2.0, 1, 3, 2)), 1.0);
        let heavy = qed_from_properties(&PropertyVector::new(650.0, 2.0, 1, 3, 2));
        assert!((heavy - (RAMP_FLOOR + (1.0 - RAMP_FLOOR) * 50.0 / 300.0)).abs() < 1e-12);
    }

    #[test]
    fn sa_range() {
        assert_eq!(sa_from_raw(0.0), 1.0);
        assert!(sa_from_raw(1e6) <= 10.0);
        let small = proxy_sa(&parse_smiles("CC").unwrap());
        let big = proxy_sa(&parse_smiles("c1ccc2ccccc2c1CCN").unwrap());
        assert!(small < big);
    }

    #[test]
    fn reference_members_have_no_rarity() {
        let mols: Vec<Molecule> = ["CCO", "c1ccccc1"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let p = ProxyProvider::with_reference(&mols);
        assert_eq!(p.rarity(&mols[0]), 0.0);
        assert!(p.rarity(&parse_smiles("CCN").unwrap()) > 0.0);
    }
}
