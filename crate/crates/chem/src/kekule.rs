//! Kekulization: assigning alternating single/double orders to aromatic bonds.

use crate::element::Element;
use crate::error::ChemError;
use crate::molecule::{BondOrder, Molecule};

/// Upper bound on backtracking steps; pathological inputs fail instead of hanging.
const SEARCH_BUDGET: usize = 200_000;

/// Valence still available at an atom whose bonds and hydrogens already use
/// `used`, measured against the lowest allowed valence that fits.
pub(crate) fn free_valence(element: Element, charge: i8, used: u32) -> Option<u32> {
    element.lowest_valence_at_least(charge, used).map(|v| v - used)
}

/// Chooses a set of bonds forming a perfect matching over `candidates`,
/// restricted to the given `(atom, atom, bond index)` edges. Returns the
/// chosen bond indices.
pub(crate) fn perfect_matching(
    num_atoms: usize,
    candidates: &[bool],
    edges: &[(usize, usize, usize)],
) -> Option<Vec<usize>> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_atoms];
    for &(a, b, bond) in edges {
        if candidates[a] && candidates[b] {
            adjacency[a].push((b, bond));
            adjacency[b].push((a, bond));
        }
    }
    let mut mate: Vec<Option<usize>> = vec![None; num_atoms];
    let mut chosen = Vec::new();
    let mut budget = SEARCH_BUDGET;
    if search(candidates, &adjacency, &mut mate, &mut chosen, &mut budget) {
        Some(chosen)
    } else {
        None
    }
}

fn search(
    candidates: &[bool],
    adjacency: &[Vec<(usize, usize)>],
    mate: &mut Vec<Option<usize>>,
    chosen: &mut Vec<usize>,
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    // Most constrained unmatched candidate first.
    let mut best: Option<(usize, usize)> = None;
    for atom in 0..candidates.len() {
        if !candidates[atom] || mate[atom].is_some() {
            continue;
        }
        let options = adjacency[atom].iter().filter(|&&(n, _)| mate[n].is_none()).count();
        if best.is_none_or(|(_, o)| options < o) {
            best = Some((atom, options));
            if options <= 1 {
                break;
            }
        }
    }
    let Some((atom, options)) = best else {
        return true;
    };
    if options == 0 {
        return false;
    }
    for &(partner, bond) in &adjacency[atom] {
        if mate[partner].is_some() {
            continue;
        }
        mate[atom] = Some(partner);
        mate[partner] = Some(atom);
        chosen.push(bond);
        if search(candidates, adjacency, mate, chosen, budget) {
            return true;
        }
        chosen.pop();
        mate[atom] = None;
        mate[partner] = None;
    }
    false
}

/// Whether an aromatic atom with known hydrogens needs a double bond in the
/// Kekulé structure.
pub(crate) fn needs_pi_bond(mol: &Molecule, atom: usize) -> Result<bool, ChemError> {
    let a = mol.atom(atom);
    let used = mol.base_valence(atom) + a.hydrogens as u32;
    match free_valence(a.element, a.charge, used) {
        Some(free) => Ok(free >= 1),
        None => Err(ChemError::valence(atom, format!("aromatic {} exceeds its valence", a.element))),
    }
}

/// Kekulé orders for a molecule whose hydrogen counts are known.
pub(crate) fn kekulize(mol: &Molecule) -> Result<Vec<u8>, ChemError> {
    let mut orders: Vec<u8> = Vec::with_capacity(mol.num_bonds());
    let mut edges = Vec::new();
    for (idx, bond) in mol.bonds().iter().enumerate() {
        match bond.order {
            BondOrder::Aromatic => {
                if !mol.atom(bond.a).aromatic || !mol.atom(bond.b).aromatic {
                    return Err(ChemError::valence(
                        bond.a,
                        "aromatic bond between non-aromatic atoms",
                    ));
                }
                edges.push((bond.a, bond.b, idx));
                orders.push(1);
            }
            other => orders.push(other.base_valence() as u8),
        }
    }
    if edges.is_empty() {
        return Ok(orders);
    }
    let mut candidates = vec![false; mol.num_atoms()];
    for (idx, atom) in mol.atoms().iter().enumerate() {
        if atom.aromatic && !atom.is_dummy() {
            candidates[idx] = needs_pi_bond(mol, idx)?;
        }
    }
    let chosen = perfect_matching(mol.num_atoms(), &candidates, &edges).ok_or_else(|| {
        let atom = candidates.iter().position(|&c| c).unwrap_or(0);
        ChemError::valence(atom, "aromatic system cannot be kekulized")
    })?;
    for bond in chosen {
        orders[bond] = 2;
    }
    Ok(orders)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_cycle_has_matching() {
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, i)).collect();
        let m = perfect_matching(6, &[true; 6], &edges).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn odd_cycle_has_none() {
        let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5, i)).collect();
        assert!(perfect_matching(5, &[true; 5], &edges).is_none());
    }

    #[test]
    fn lone_pair_atom_is_skipped() {
        // furan-like: atom 2 contributes a lone pair
        let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5, i)).collect();
        let cands = [true, true, false, true, true];
        let m = perfect_matching(5, &cands, &edges).unwrap();
        assert_eq!(m.len(), 2);
    }
}
