//! Aromaticity perception on Kekulé structures.
//!
//! Only 5- and 6-membered rings are considered. Each ring atom contributes a
//! fixed number of pi electrons determined by its own bonds (one for an atom
//! whose single double bond is a ring bond, two for a neutral N/P/O/S lone
//! pair, zero for a neutral trivalent boron); any other atom disqualifies the
//! ring. A ring is aromatic when the count satisfies 4n+2. The contribution
//! rule does not depend on where the double bonds sit, so every Kekulé form of
//! the same graph perceives the same rings.

use crate::element::Element;
use crate::kekule::free_valence;
use crate::molecule::{Atom, Bond, BondOrder, Molecule};
use crate::rings;

fn pi_electrons(mol: &Molecule, atom: usize) -> Option<u32> {
    let a = mol.atom(atom);
    if a.is_dummy() {
        return None;
    }
    let mut doubles = Vec::new();
    for &(_, bond) in mol.neighbors(atom) {
        match mol.bond(bond).order {
            BondOrder::Double => doubles.push(bond),
            BondOrder::Triple | BondOrder::Aromatic => return None,
            BondOrder::Single => {}
        }
    }
    match doubles.as_slice() {
        [bond] => mol.is_ring_bond(*bond).then_some(1),
        [] => {
            if a.charge != 0 {
                return None;
            }
            let connections = mol.degree(atom) + a.hydrogens as usize;
            match (a.element, connections) {
                (Element::N | Element::P, 3) => Some(2),
                (Element::O | Element::S, 2) => Some(2),
                (Element::B, 3) => Some(0),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Returns the molecule with aromatic rings marked. Input bonds must be Kekulé.
pub(crate) fn perceive(mol: Molecule) -> Molecule {
    let n = mol.num_atoms();
    let electrons: Vec<Option<u32>> = (0..n).map(|i| pi_electrons(&mol, i)).collect();
    let ring_flags: Vec<bool> = (0..mol.num_bonds()).map(|b| mol.is_ring_bond(b)).collect();
    let adjacency: Vec<Vec<(usize, usize)>> = (0..n).map(|i| mol.neighbors(i).to_vec()).collect();

    let mut aromatic_bond = vec![false; mol.num_bonds()];
    for cycle in rings::small_cycles(&adjacency, &ring_flags, 5, 6) {
        let mut total = 0;
        let mut ok = true;
        for &atom in &cycle {
            match electrons[atom] {
                Some(e) => total += e,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || total % 4 != 2 {
            continue;
        }
        for i in 0..cycle.len() {
            let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            if let Some(bond) = mol.bond_between(a, b) {
                aromatic_bond[bond] = true;
            }
        }
    }
    if !aromatic_bond.iter().any(|&b| b) {
        return mol;
    }

    // Group marked bonds into connected aromatic systems.
    let mut component = vec![usize::MAX; n];
    let mut systems: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let touches = mol.neighbors(start).iter().any(|&(_, b)| aromatic_bond[b]);
        if !touches || component[start] != usize::MAX {
            continue;
        }
        let id = systems.len();
        let mut members = vec![start];
        component[start] = id;
        let mut cursor = 0;
        while cursor < members.len() {
            let u = members[cursor];
            cursor += 1;
            for &(v, b) in mol.neighbors(u) {
                if aromatic_bond[b] && component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                }
            }
        }
        systems.push(members);
    }

    // A system is kept only if re-reading its aromatic form infers exactly the
    // atoms that carry an aromatic double bond as pi-bond candidates.
    for members in &systems {
        let consistent = members.iter().all(|&atom| {
            let a = mol.atom(atom);
            let mut base = a.hydrogens as u32;
            let mut double_is_aromatic = false;
            for &(_, b) in mol.neighbors(atom) {
                let order = mol.bond(b).order;
                if aromatic_bond[b] {
                    base += 1;
                    double_is_aromatic |= order == BondOrder::Double;
                } else {
                    base += order.base_valence();
                }
            }
            match free_valence(a.element, a.charge, base) {
                Some(0) => !double_is_aromatic,
                Some(1) => double_is_aromatic,
                _ => false,
            }
        });
        if !consistent {
            for &atom in members {
                for &(_, b) in mol.neighbors(atom) {
                    aromatic_bond[b] = false;
                }
            }
        }
    }

    let (mut atoms, bonds): (Vec<Atom>, Vec<Bond>) = mol.into_parts();
    let bonds: Vec<Bond> = bonds
        .into_iter()
        .enumerate()
        .map(|(i, mut bond)| {
            if aromatic_bond[i] {
                bond.order = BondOrder::Aromatic;
                atoms[bond.a].aromatic = true;
                atoms[bond.b].aromatic = true;
            }
            bond
        })
        .collect();
    Molecule::from_graph(atoms, bonds).expect("aromatic marking keeps the graph valid")
}
