//! Substructure search by backtracking over a connected query ordering.

use std::collections::BTreeSet;
use std::fmt;

use crate::molecule::{Atom, BondOrder, Molecule};

/// A parsed substructure query. Build with [`crate::parse_pattern`].
#[derive(Debug, Clone)]
pub struct Pattern {
    text: String,
    graph: Molecule,
    /// Per atom: `(hydrogens, charge)` required by a bracket atom.
    constraints: Vec<Option<(u8, i8)>>,
}

impl Pattern {
    pub(crate) fn from_parts(text: &str, graph: Molecule, constraints: Vec<Option<(u8, i8)>>) -> Self {
        Pattern { text: text.to_string(), graph, constraints }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn graph(&self) -> &Molecule {
        &self.graph
    }

    /// `(hydrogens, charge)` required at a bracket atom of the query.
    pub fn atom_constraint(&self, atom: usize) -> Option<(u8, i8)> {
        self.constraints[atom]
    }

    /// Query built from a molecule graph, without hydrogen or charge constraints.
    pub fn from_molecule(mol: &Molecule) -> Self {
        let text = crate::write_canonical(mol).into_string();
        Pattern { text, graph: mol.clone(), constraints: vec![None; mol.num_atoms()] }
    }

    pub fn matches(&self, target: &Molecule) -> bool {
        match_substructure(self, target)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

/// Query atom order in which every atom after the first is adjacent to an
/// earlier one, with that earlier neighbour recorded.
fn query_order(query: &Molecule) -> Vec<(usize, Option<usize>)> {
    let n = query.num_atoms();
    let mut seen = vec![false; n];
    let mut order = vec![(0, None)];
    seen[0] = true;
    let mut cursor = 0;
    while cursor < order.len() {
        let (u, _) = order[cursor];
        cursor += 1;
        for &(v, _) in query.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                order.push((v, Some(u)));
            }
        }
    }
    order
}

trait Rules {
    fn atom_ok(&self, q: usize, t: &Atom) -> bool;
    fn bond_ok(&self, q_bond: usize, t: BondOrder) -> bool;
}

struct PatternRules<'a>(&'a Pattern);

impl Rules for PatternRules<'_> {
    fn atom_ok(&self, q: usize, t: &Atom) -> bool {
        let qa = self.0.graph.atom(q);
        if qa.is_dummy() {
            return true;
        }
        if qa.element != t.element || qa.aromatic != t.aromatic {
            return false;
        }
        match self.0.constraints[q] {
            Some((h, c)) => t.hydrogens == h && t.charge == c,
            None => true,
        }
    }

    fn bond_ok(&self, q_bond: usize, t: BondOrder) -> bool {
        let b = self.0.graph.bond(q_bond);
        if b.order == t {
            return true;
        }
        b.order == BondOrder::Single && t == BondOrder::Aromatic
    }
}

struct ExactRules<'a>(&'a Molecule);

impl Rules for ExactRules<'_> {
    fn atom_ok(&self, q: usize, t: &Atom) -> bool {
        self.0.atom(q) == t
    }

    fn bond_ok(&self, q_bond: usize, t: BondOrder) -> bool {
        self.0.bond(q_bond).order == t
    }
}

struct Matcher<'a, R: Rules> {
    query: &'a Molecule,
    target: &'a Molecule,
    rules: R,
    order: Vec<(usize, Option<usize>)>,
    q_to_t: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl<'a, R: Rules> Matcher<'a, R> {
    fn new(query: &'a Molecule, target: &'a Molecule, rules: R) -> Self {
        Matcher {
            query,
            target,
            rules,
            order: query_order(query),
            q_to_t: vec![None; query.num_atoms()],
            used: vec![false; target.num_atoms()],
        }
    }

    fn feasible(&self, q: usize, t: usize) -> bool {
        if self.used[t] || !self.rules.atom_ok(q, self.target.atom(t)) {
            return false;
        }
        if self.target.degree(t) < self.query.degree(q) {
            return false;
        }
        for &(qn, qb) in self.query.neighbors(q) {
            if let Some(tn) = self.q_to_t[qn] {
                match self.target.bond_between(t, tn) {
                    Some(tb) if self.rules.bond_ok(qb, self.target.bond(tb).order) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Calls `visit` for every complete mapping; stops when it returns false.
    fn run(&mut self, depth: usize, visit: &mut dyn FnMut(&[Option<usize>]) -> bool) -> bool {
        if depth == self.order.len() {
            return visit(&self.q_to_t);
        }
        let (q, parent) = self.order[depth];
        let candidates: Vec<usize> = match parent {
            Some(p) => {
                let tp = self.q_to_t[p].expect("parent mapped earlier");
                self.target.neighbors(tp).iter().map(|&(n, _)| n).collect()
            }
            None => (0..self.target.num_atoms()).collect(),
        };
        for t in candidates {
            if !self.feasible(q, t) {
                continue;
            }
            self.q_to_t[q] = Some(t);
            self.used[t] = true;
            let keep_going = self.run(depth + 1, visit);
            self.used[t] = false;
            self.q_to_t[q] = None;
            if !keep_going {
                return false;
            }
        }
        true
    }
}

fn flatten(mapping: &[Option<usize>]) -> Vec<usize> {
    mapping.iter().map(|m| m.expect("complete mapping")).collect()
}

/// Whether the pattern embeds in `target` (subgraph monomorphism).
pub fn match_substructure(pattern: &Pattern, target: &Molecule) -> bool {
    find_match(pattern, target).is_some()
}

/// First mapping of pattern atoms onto target atoms, if any.
pub fn find_match(pattern: &Pattern, mol: &Molecule) -> Option<Vec<usize>> {
    if pattern.graph.num_atoms() > mol.num_atoms() {
        return None;
    }
    let mut found = None;
    let mut matcher = Matcher::new(&pattern.graph, mol, PatternRules(pattern));
    matcher.run(0, &mut |m| {
        found = Some(flatten(m));
        false
    });
    found
}

/// Every mapping of pattern atoms onto `mol` atoms, including symmetric ones.
pub fn all_matches(pattern: &Pattern, mol: &Molecule) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    if pattern.graph.num_atoms() > mol.num_atoms() {
        return found;
    }
    let mut matcher = Matcher::new(&pattern.graph, mol, PatternRules(pattern));
    matcher.run(0, &mut |m| {
        found.push(flatten(m));
        true
    });
    found
}

/// Number of distinct target atom sets matched by the pattern.
pub fn count_matches(pattern: &Pattern, mol: &Molecule) -> usize {
    all_matches(pattern, mol)
        .into_iter()
        .map(|m| m.into_iter().collect::<BTreeSet<usize>>())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Exact graph isomorphism including atom labels, hydrogen counts, charges,
/// atom classes and bond orders.
pub fn is_isomorphic(a: &Molecule, b: &Molecule) -> bool {
    if a.num_atoms() != b.num_atoms() || a.num_bonds() != b.num_bonds() {
        return false;
    }
    let mut label_a: Vec<&Atom> = a.atoms().iter().collect();
    let mut label_b: Vec<&Atom> = b.atoms().iter().collect();
    let key = |x: &&Atom| (x.element, x.aromatic, x.charge, x.hydrogens, x.map);
    label_a.sort_by_key(key);
    label_b.sort_by_key(key);
    if label_a != label_b {
        return false;
    }
    let mut found = false;
    let mut matcher = Matcher::new(a, b, ExactRules(a));
    matcher.run(0, &mut |_| {
        found = true;
        false
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{parse_pattern, parse_smiles};

    fn count(smiles: &str, pattern: &str) -> usize {
        count_matches(&parse_pattern(pattern).unwrap(), &parse_smiles(smiles).unwrap())
    }

    #[test]
    fn kekule_query_matches_aromatic_ring() {
        assert_eq!(count("Cc1ccccc1", "C1=CC=CC=C1"), 1);
        assert_eq!(count("c1ccc2ccccc2c1", "c1ccccc1"), 2);
    }

    #[test]
    fn hydrogen_constraints() {
        assert_eq!(count("OCCO", "[OH]"), 2);
        assert_eq!(count("COCCO", "[OH]"), 1);
        assert_eq!(count("NCCN", "[NH2]"), 2);
        assert_eq!(count("CNC", "[NH2]"), 0);
    }

    #[test]
    fn acrylate_motif() {
        assert_eq!(count("C=CC(=O)OCC", "C=CC(=O)O"), 1);
        assert_eq!(count("C=CC(=O)N", "C=CC(=O)O"), 0);
        assert_eq!(count("CC(=C)C(=O)OC", "[CH2]=[CH]C(=O)O"), 0);
        assert_eq!(count("C=CC(=O)OCCOC(=O)C=C", "C=CC(=O)O"), 2);
    }

    #[test]
    fn wildcard_matches_anything() {
        assert_eq!(count("CCO", "*O"), 1);
        assert_eq!(count("c1ccccc1O", "*O"), 1);
    }

    #[test]
    fn isomorphism_ignores_numbering() {
        let a = parse_smiles("OCC(N)c1ccccc1").unwrap();
        let b = parse_smiles("c1ccc(cc1)C(N)CO").unwrap();
        let c = parse_smiles("NCC(O)c1ccccc1").unwrap();
        assert!(is_isomorphic(&a, &b));
        assert!(!is_isomorphic(&a, &c));
    }
}
