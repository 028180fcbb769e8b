//! Bemis-Murcko scaffolds.

use crate::canon::{write_canonical, CanonicalSmiles};
use crate::molecule::{Atom, Bond, Molecule};

/// Ring systems plus linkers, obtained by repeatedly deleting terminal
/// non-ring atoms. `None` for acyclic molecules.
pub fn murcko_scaffold(mol: &Molecule) -> Option<CanonicalSmiles> {
    scaffold_molecule(mol).map(|m| write_canonical(&m))
}

pub fn scaffold_molecule(mol: &Molecule) -> Option<Molecule> {
    if mol.ring_bonds().is_empty() {
        return None;
    }
    let n = mol.num_atoms();
    let mut alive = vec![true; n];
    let mut hydrogens: Vec<u8> = mol.atoms().iter().map(|a| a.hydrogens).collect();
    let mut degree: Vec<usize> = (0..n).map(|i| mol.degree(i)).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| degree[i] <= 1 && !mol.is_ring_atom(i)).collect();
    while let Some(u) = queue.pop() {
        if !alive[u] {
            continue;
        }
        alive[u] = false;
        for &(v, b) in mol.neighbors(u) {
            if !alive[v] {
                continue;
            }
            degree[v] -= 1;
            if !mol.atom(v).is_dummy() {
                hydrogens[v] += mol.bond(b).order.base_valence() as u8;
            }
            if degree[v] <= 1 && !mol.is_ring_atom(v) {
                queue.push(v);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut atoms = Vec::new();
    for i in (0..n).filter(|&i| alive[i]) {
        index[i] = atoms.len();
        atoms.push(Atom { hydrogens: hydrogens[i], ..mol.atom(i).clone() });
    }
    let bonds = mol
        .bonds()
        .iter()
        .filter(|b| alive[b.a] && alive[b.b])
        .map(|b| Bond::new(index[b.a], index[b.b], b.order))
        .collect();
    Some(Molecule::new(atoms, bonds).expect("pruning terminal atoms keeps a valid ring system"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_smiles;

    fn scaffold(s: &str) -> Option<String> {
        murcko_scaffold(&parse_smiles(s).unwrap()).map(|c| c.into_string())
    }

    #[test]
    fn toluene_gives_benzene() {
        assert_eq!(scaffold("Cc1ccccc1").as_deref(), Some("c1ccccc1"));
    }

    #[test]
    fn acyclic_is_empty() {
        assert_eq!(scaffold("CCO"), None);
    }

    #[test]
    fn benzene_is_fixed_point() {
        assert_eq!(scaffold("c1ccccc1").as_deref(), Some("c1ccccc1"));
    }

    #[test]
    fn linker_is_kept() {
        let expected = write_canonical(&parse_smiles("c1ccc(cc1)CCc1ccccc1").unwrap()).into_string();
        assert_eq!(scaffold("Oc1ccc(CCc2ccccc2)cc1C"), Some(expected));
    }

    #[test]
    fn exocyclic_double_bond_is_pruned() {
        let expected = write_canonical(&parse_smiles("C1CCCCC1").unwrap()).into_string();
        assert_eq!(scaffold("O=C1CCCCC1"), Some(expected));
    }
}
