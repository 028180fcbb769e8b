use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::ChemError;
use crate::kekule;
use crate::rings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer order for non-aromatic bonds; aromatic bonds count as 1 here and
    /// are resolved through kekulization where the exact value matters.
    pub fn base_valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn from_integer(order: u32) -> Option<BondOrder> {
        match order {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Total hydrogen count (implicit and bracket-explicit are not distinguished).
    pub hydrogens: u8,
    /// Atom class; only meaningful on wildcard atoms (fragment site ordinals).
    pub map: u16,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom { element, charge: 0, aromatic: false, hydrogens: 0, map: 0 }
    }

    pub fn is_dummy(&self) -> bool {
        self.element == Element::Dummy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A connected, valence-checked molecular graph with perceived ring bonds.
///
/// Values are immutable once constructed; editing goes through
/// [`Molecule::into_parts`] and a fresh [`Molecule::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
}

impl Molecule {
    /// Builds a molecule from atoms and bonds, checking connectivity and
    /// valence. Aromatic flags are taken as given and must be kekulizable.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        let mol = Self::from_graph(atoms, bonds)?;
        mol.check_valence()?;
        Ok(mol)
    }

    /// Structural checks only (indices, duplicate bonds, connectivity); used
    /// for query patterns, which carry no valence semantics.
    pub(crate) fn from_graph(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, ChemError> {
        if atoms.is_empty() {
            return Err(ChemError::InvalidGraph("molecule has no atoms".into()));
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (idx, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::InvalidGraph(format!("bond {idx} references a missing atom")));
            }
            if bond.a == bond.b {
                return Err(ChemError::InvalidGraph(format!("bond {idx} is a self loop")));
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(ChemError::InvalidGraph(format!("duplicate bond between atoms {} and {}", key.0, key.1)));
            }
            adjacency[bond.a].push((bond.b, idx));
            adjacency[bond.b].push((bond.a, idx));
        }
        if !rings::is_connected(&adjacency) {
            return Err(ChemError::Disconnected);
        }
        let ring_bond = rings::ring_bonds(&adjacency, bonds.len());
        Ok(Molecule { atoms, bonds, adjacency, ring_bond })
    }

    fn check_valence(&self) -> Result<(), ChemError> {
        let orders = kekule::kekulize(self)?;
        for (idx, atom) in self.atoms.iter().enumerate() {
            if atom.is_dummy() {
                continue;
            }
            let used: u32 = self.adjacency[idx].iter().map(|&(_, b)| orders[b] as u32).sum::<u32>()
                + atom.hydrogens as u32;
            match atom.element.max_valence(atom.charge) {
                None => {
                    return Err(ChemError::valence(
                        idx,
                        format!("unsupported charge {} on {}", atom.charge, atom.element),
                    ))
                }
                Some(max) if used > max => {
                    return Err(ChemError::valence(
                        idx,
                        format!("{} uses valence {used}, allowed at most {max}", atom.element),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn bond(&self, idx: usize) -> &Bond {
        &self.bonds[idx]
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor atom, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom].iter().filter(|&&(n, _)| self.atoms[n].element.is_heavy()).count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, bond)| bond)
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    /// Indices of bonds lying on at least one cycle.
    pub fn ring_bonds(&self) -> BTreeSet<usize> {
        (0..self.bonds.len()).filter(|&b| self.ring_bond[b]).collect()
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, b)| self.ring_bond[b])
    }

    /// Cyclomatic number (independent cycle count).
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + 1 - self.atoms.len()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element.is_heavy()).count()
    }

    /// Sum of bond orders at an atom with aromatic bonds counted as 1.
    pub(crate) fn base_valence(&self, atom: usize) -> u32 {
        self.adjacency[atom].iter().map(|&(_, b)| self.bonds[b].order.base_valence()).sum()
    }

    /// Kekulé bond orders (1, 2 or 3) for every bond.
    pub fn kekule_orders(&self) -> Result<Vec<u8>, ChemError> {
        kekule::kekulize(self)
    }

    /// Same molecule with atoms renumbered: new atom `i` is old atom `order[i]`.
    pub fn renumbered(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len(), "renumbering must be a permutation");
        let mut position = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(position[b.a], position[b.b], b.order))
            .collect();
        Molecule::from_graph(atoms, bonds).expect("renumbering preserves structure")
    }

    pub fn into_parts(self) -> (Vec<Atom>, Vec<Bond>) {
        (self.atoms, self.bonds)
    }
}
