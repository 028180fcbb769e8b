//! Scalar descriptors: molecular weight, logP estimate, H-bond donors and
//! acceptors, rotatable bonds, and the Rule-of-Five filter.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::element::{Element, HYDROGEN_WEIGHT};
use crate::error::ChemError;
use crate::molecule::{BondOrder, Molecule};

const DEFAULT_TABLE: &str = include_str!("../data/logp_contributions.toml");

/// Versioned atom-contribution table for the logP estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPTable {
    pub version: u32,
    pub contributions: BTreeMap<String, f64>,
}

impl LogPTable {
    pub fn from_toml(text: &str) -> Result<Self, ChemError> {
        let table: LogPTable = toml::from_str(text).map_err(|e| ChemError::LogPTable(e.to_string()))?;
        if let Some((k, v)) = table.contributions.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ChemError::LogPTable(format!("non-finite contribution {v} for {k}")));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ChemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChemError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml(&text)
    }

    /// The table shipped with the crate.
    pub fn shipped() -> &'static LogPTable {
        static TABLE: OnceLock<LogPTable> = OnceLock::new();
        TABLE.get_or_init(|| LogPTable::from_toml(DEFAULT_TABLE).expect("shipped logP table is valid"))
    }

    pub fn contribution(&self, class: &str) -> Result<f64, ChemError> {
        self.contributions
            .get(class)
            .copied()
            .ok_or_else(|| ChemError::UnknownAtomType(class.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyVector {
    pub mol_weight: f64,
    pub logp: f64,
    pub hbd: u32,
    pub hba: u32,
    pub rotatable_bonds: u32,
    /// Atoms whose logP class was missing from the table (counted as 0).
    #[serde(default)]
    pub logp_unknown_atoms: u32,
}

impl PropertyVector {
    pub fn new(mol_weight: f64, logp: f64, hbd: u32, hba: u32, rotatable_bonds: u32) -> Self {
        PropertyVector { mol_weight, logp, hbd, hba, rotatable_bonds, logp_unknown_atoms: 0 }
    }
}

/// logP class of a heavy atom; `None` for wildcards.
pub fn logp_class(mol: &Molecule, atom: usize) -> Option<&'static str> {
    let a = mol.atom(atom);
    let bonds = || mol.neighbors(atom).iter().map(|&(n, b)| (mol.atom(n), mol.bond(b).order));
    let has = |order: BondOrder| bonds().any(|(_, o)| o == order);
    let double_to = |els: &[Element]| bonds().any(|(n, o)| o == BondOrder::Double && els.contains(&n.element));
    Some(match a.element {
        Element::Dummy => return None,
        Element::C => {
            if a.aromatic {
                "C.aromatic"
            } else if has(BondOrder::Triple) {
                "C.sp"
            } else if double_to(&[Element::O, Element::S]) {
                "C.carbonyl"
            } else if has(BondOrder::Double) {
                "C.sp2"
            } else if bonds().any(|(n, _)| matches!(n.element, Element::N | Element::O)) {
                "C.sp3.polar"
            } else {
                "C.sp3"
            }
        }
        Element::N => {
            if a.charge != 0 {
                "N.charged"
            } else if a.aromatic {
                "N.aromatic"
            } else if has(BondOrder::Triple) {
                "N.sp"
            } else if has(BondOrder::Double) {
                "N.sp2"
            } else {
                "N.amine"
            }
        }
        Element::O => {
            if a.charge != 0 {
                "O.charged"
            } else if a.aromatic {
                "O.aromatic"
            } else if has(BondOrder::Double) {
                "O.carbonyl"
            } else if a.hydrogens > 0 {
                "O.hydroxyl"
            } else {
                "O.ether"
            }
        }
        Element::S => {
            if a.aromatic {
                "S.aromatic"
            } else if double_to(&[Element::O]) {
                "S.oxidized"
            } else {
                "S"
            }
        }
        Element::P => "P",
        Element::B => "B",
        Element::F => "F",
        Element::Cl => "Cl",
        Element::Br => "Br",
        Element::I => "I",
    })
}

fn is_polar(e: Element) -> bool {
    matches!(e, Element::N | Element::O)
}

/// Descriptors using the shipped logP table.
pub fn properties(mol: &Molecule) -> PropertyVector {
    properties_with(mol, LogPTable::shipped())
}

pub fn properties_with(mol: &Molecule, table: &LogPTable) -> PropertyVector {
    let mut p = PropertyVector::new(0.0, 0.0, 0, 0, 0);
    let add = |class: &str, count: f64, unknown: &mut u32| match table.contribution(class) {
        Ok(v) => v * count,
        Err(_) => {
            *unknown += 1;
            0.0
        }
    };
    for (i, a) in mol.atoms().iter().enumerate() {
        p.mol_weight += a.element.atomic_weight() + a.hydrogens as f64 * HYDROGEN_WEIGHT;
        let Some(class) = logp_class(mol, i) else { continue };
        let mut unknown = 0;
        p.logp += add(class, 1.0, &mut unknown);
        if a.hydrogens > 0 {
            let h_class = if a.element == Element::C { "H.carbon" } else { "H.hetero" };
            p.logp += add(h_class, a.hydrogens as f64, &mut unknown);
        }
        p.logp_unknown_atoms += unknown;
        if is_polar(a.element) {
            p.hba += 1;
            if a.hydrogens > 0 {
                p.hbd += 1;
            }
        }
    }
    for (idx, bond) in mol.bonds().iter().enumerate() {
        let rotatable = bond.order == BondOrder::Single
            && !mol.is_ring_bond(idx)
            && mol.atom(bond.a).element.is_heavy()
            && mol.atom(bond.b).element.is_heavy()
            && mol.heavy_degree(bond.a) >= 2
            && mol.heavy_degree(bond.b) >= 2;
        if rotatable {
            p.rotatable_bonds += 1;
        }
    }
    p
}

/// Rule of Five with inclusive thresholds.
pub fn lipinski_pass(p: &PropertyVector) -> bool {
    p.mol_weight <= 500.0 && p.logp <= 5.0 && p.hbd <= 5 && p.hba <= 10
}
