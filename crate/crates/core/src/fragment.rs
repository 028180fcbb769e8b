//! Fragments, cut enumeration and reassembly.
//!
//! A fragment is a connected subgraph whose severed bonds are replaced by
//! wildcard atoms. Wildcards carry the site ordinal as atom class (`[*:1]`,
//! `[*:2]`, ...), assigned from the canonical ranking of the unlabeled
//! fragment, so a key string identifies both the fragment and the meaning of
//! each site index.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use fraglearn_chem::{
    canonical_ranking, parse_fragment, write_canonical, Atom, Bond, BondOrder, Element, Molecule,
};

use crate::error::{CoreError, Result};

/// Open attachment point of a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentSite {
    /// Heavy atom that bonds to the partner fragment.
    pub host: usize,
    /// Wildcard atom standing in for the partner.
    pub dummy: usize,
    /// Order of the severed bond.
    pub order: BondOrder,
}

#[derive(Debug, Clone)]
pub struct Fragment {
    key: String,
    mol: Molecule,
    sites: Vec<AttachmentSite>,
}

impl PartialEq for Fragment {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Fragment {}

impl Fragment {
    /// Rebuilds a fragment from its key. Site `i` is the wildcard labelled `i + 1`.
    pub fn from_key(key: &str) -> Result<Fragment> {
        let invalid = |reason: &str| CoreError::InvalidFragment { key: key.to_string(), reason: reason.to_string() };
        let mol = parse_fragment(key).map_err(|e| invalid(&e.to_string()))?;
        let mut labelled: Vec<(u16, AttachmentSite)> = Vec::new();
        for (idx, atom) in mol.atoms().iter().enumerate() {
            if !atom.is_dummy() {
                continue;
            }
            let [(host, bond)] = mol.neighbors(idx) else {
                return Err(invalid("attachment wildcard must have exactly one neighbour"));
            };
            if mol.atom(*host).is_dummy() {
                return Err(invalid("attachment wildcard bonded to another wildcard"));
            }
            labelled.push((atom.map, AttachmentSite { host: *host, dummy: idx, order: mol.bond(*bond).order }));
        }
        labelled.sort_by_key(|(map, _)| *map);
        if labelled.iter().enumerate().any(|(i, (map, _))| *map as usize != i + 1) {
            return Err(invalid("site labels must be 1..=n"));
        }
        if labelled.len() == mol.num_atoms() {
            return Err(invalid("fragment has no heavy atoms"));
        }
        let sites = labelled.into_iter().map(|(_, s)| s).collect();
        Ok(Fragment { key: key.to_string(), mol, sites })
    }

    /// Canonical fragment from a graph whose wildcards are unlabelled.
    /// Returns the fragment and, for each input wildcard index, its site index.
    pub fn from_graph(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<(Fragment, BTreeMap<usize, usize>)> {
        let unlabelled = Molecule::new(atoms, bonds)?;
        let rank = canonical_ranking(&unlabelled);
        let mut dummies: Vec<usize> = (0..unlabelled.num_atoms()).filter(|&i| unlabelled.atom(i).is_dummy()).collect();
        dummies.sort_by_key(|&i| rank[i]);
        let site_of: BTreeMap<usize, usize> = dummies.iter().enumerate().map(|(s, &d)| (d, s)).collect();
        let (mut atoms, bonds) = unlabelled.into_parts();
        for (&d, &s) in &site_of {
            atoms[d].map = (s + 1) as u16;
        }
        let labelled = Molecule::new(atoms, bonds)?;
        let key = write_canonical(&labelled).into_string();
        Ok((Fragment::from_key(&key)?, site_of))
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// Fragment graph including wildcard atoms.
    pub fn molecule(&self) -> &Molecule {
        &self.mol
    }

    pub fn sites(&self) -> &[AttachmentSite] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.mol.heavy_atom_count()
    }
}

/// Pairing of two fragment sites inside a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionRecord {
    pub fragment_a: usize,
    pub site_a: usize,
    pub fragment_b: usize,
    pub site_b: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub source: Molecule,
    pub cut_bonds: BTreeSet<usize>,
    pub fragments: Vec<Fragment>,
    pub connections: Vec<ConnectionRecord>,
}

impl Decomposition {
    /// Fragment keys sorted lexicographically (the decomposition tie-break key).
    pub fn sorted_keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.fragments.iter().map(|f| f.key()).collect();
        keys.sort_unstable();
        keys
    }

    pub fn reassemble(&self) -> Result<Molecule> {
        let parts: Vec<&Fragment> = self.fragments.iter().collect();
        let links: Vec<Link> = self
            .connections
            .iter()
            .map(|c| Link { part_a: c.fragment_a, site_a: c.site_a, part_b: c.fragment_b, site_b: c.site_b })
            .collect();
        assemble(&parts, &links, false)
    }
}

fn is_terminal_bare(mol: &Molecule, atom: usize) -> bool {
    mol.degree(atom) == 1 && mol.atom(atom).hydrogens == 0
}

/// Single, acyclic bonds between heavy atoms whose removal does not leave a
/// lone hydrogen-free atom (halogens, charged oxygens and similar stay attached).
pub fn cuttable_bonds(mol: &Molecule) -> BTreeSet<usize> {
    mol.bonds()
        .iter()
        .enumerate()
        .filter(|&(idx, b)| {
            b.order == BondOrder::Single
                && !mol.is_ring_bond(idx)
                && mol.atom(b.a).element.is_heavy()
                && mol.atom(b.b).element.is_heavy()
                && !is_terminal_bare(mol, b.a)
                && !is_terminal_bare(mol, b.b)
        })
        .map(|(idx, _)| idx)
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Deletes the cut bonds and turns each connected component into a fragment.
pub fn apply_cuts(mol: &Molecule, cuts: &BTreeSet<usize>) -> Result<Decomposition> {
    let allowed = cuttable_bonds(mol);
    if let Some(&bad) = cuts.iter().find(|b| !allowed.contains(b)) {
        return Err(CoreError::InvalidCut(bad));
    }
    let n = mol.num_atoms();
    let mut parent: Vec<usize> = (0..n).collect();
    for (idx, b) in mol.bonds().iter().enumerate() {
        if !cuts.contains(&idx) {
            let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut component_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &roots {
        let next = component_ids.len();
        component_ids.entry(r).or_insert(next);
    }
    let component: Vec<usize> = roots.iter().map(|r| component_ids[r]).collect();
    let count = component_ids.len();

    let mut local = vec![usize::MAX; n];
    let mut atoms: Vec<Vec<Atom>> = vec![Vec::new(); count];
    for i in 0..n {
        local[i] = atoms[component[i]].len();
        atoms[component[i]].push(mol.atom(i).clone());
    }
    let mut bonds: Vec<Vec<Bond>> = vec![Vec::new(); count];
    for (idx, b) in mol.bonds().iter().enumerate() {
        if !cuts.contains(&idx) {
            bonds[component[b.a]].push(Bond::new(local[b.a], local[b.b], b.order));
        }
    }
    // One wildcard per severed bond end: (component, wildcard index) for a and b.
    type End = (usize, usize);
    let mut ends: Vec<(End, End, BondOrder)> = Vec::new();
    for &idx in cuts {
        let b = mol.bond(idx);
        let mut add = |host: usize| {
            let c = component[host];
            let d = atoms[c].len();
            atoms[c].push(Atom::new(Element::Dummy));
            bonds[c].push(Bond::new(local[host], d, b.order));
            (c, d)
        };
        let end_a = add(b.a);
        let end_b = add(b.b);
        ends.push((end_a, end_b, b.order));
    }
    let mut fragments = Vec::with_capacity(count);
    let mut site_maps = Vec::with_capacity(count);
    for (a, b) in atoms.into_iter().zip(bonds) {
        let (fragment, sites) = Fragment::from_graph(a, b)?;
        fragments.push(fragment);
        site_maps.push(sites);
    }
    let connections = ends
        .into_iter()
        .map(|((ca, da), (cb, db), order)| ConnectionRecord {
            fragment_a: ca,
            site_a: site_maps[ca][&da],
            fragment_b: cb,
            site_b: site_maps[cb][&db],
            order,
        })
        .collect();
    Ok(Decomposition { source: mol.clone(), cut_bonds: cuts.clone(), fragments, connections })
}

/// A bond between site `site_a` of part `part_a` and site `site_b` of part `part_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub part_a: usize,
    pub site_a: usize,
    pub part_b: usize,
    pub site_b: usize,
}

/// Joins fragments along links. Unlinked sites are capped with hydrogens when
/// `cap_open` is set, otherwise they are an error.
pub fn assemble(parts: &[&Fragment], links: &[Link], cap_open: bool) -> Result<Molecule> {
    let mut offsets = Vec::with_capacity(parts.len());
    let mut atoms: Vec<Atom> = Vec::new();
    let mut index: Vec<Vec<usize>> = Vec::with_capacity(parts.len());
    for part in parts {
        offsets.push(atoms.len());
        let mut map = Vec::with_capacity(part.mol.num_atoms());
        for atom in part.mol.atoms() {
            if atom.is_dummy() {
                map.push(usize::MAX);
            } else {
                map.push(atoms.len());
                atoms.push(Atom { map: 0, ..atom.clone() });
            }
        }
        index.push(map);
    }
    let mut bonds: Vec<Bond> = Vec::new();
    for (p, part) in parts.iter().enumerate() {
        for b in part.mol.bonds() {
            let (a, c) = (index[p][b.a], index[p][b.b]);
            if a != usize::MAX && c != usize::MAX {
                bonds.push(Bond::new(a, c, b.order));
            }
        }
    }
    let mut used: Vec<Vec<bool>> = parts.iter().map(|p| vec![false; p.num_sites()]).collect();
    for link in links {
        let sa = parts[link.part_a].sites[link.site_a];
        let sb = parts[link.part_b].sites[link.site_b];
        if sa.order != sb.order {
            return Err(CoreError::Config(format!(
                "incompatible sites: {:?} vs {:?}",
                sa.order, sb.order
            )));
        }
        if std::mem::replace(&mut used[link.part_a][link.site_a], true)
            || std::mem::replace(&mut used[link.part_b][link.site_b], true)
        {
            return Err(CoreError::Config("site linked twice".into()));
        }
        bonds.push(Bond::new(index[link.part_a][sa.host], index[link.part_b][sb.host], sa.order));
    }
    for (p, part) in parts.iter().enumerate() {
        for (s, site) in part.sites.iter().enumerate() {
            if used[p][s] {
                continue;
            }
            if !cap_open {
                return Err(CoreError::Config(format!("open site {s} on part {p}")));
            }
            let host = &mut atoms[index[p][site.host]];
            host.hydrogens += site.order.base_valence() as u8;
        }
    }
    Ok(Molecule::new(atoms, bonds)?)
}

/// Distinct fragments across decompositions, keyed by fragment key.
pub fn fragment_vocabulary<'a>(decompositions: impl IntoIterator<Item = &'a Decomposition>) -> BTreeMap<String, Fragment> {
    let mut vocab = BTreeMap::new();
    for d in decompositions {
        for f in &d.fragments {
            vocab.entry(f.key.clone()).or_insert_with(|| f.clone());
        }
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraglearn_chem::{is_isomorphic, parse_smiles};

    #[test]
    fn cuttable_examples() {
        assert_eq!(cuttable_bonds(&parse_smiles("CC").unwrap()).len(), 1);
        assert!(cuttable_bonds(&parse_smiles("c1ccccc1").unwrap()).is_empty());
        let toluene = parse_smiles("Cc1ccccc1").unwrap();
        let cuts = cuttable_bonds(&toluene);
        assert_eq!(cuts.len(), 1);
        let b = toluene.bond(*cuts.iter().next().unwrap());
        assert!(!toluene.is_ring_bond(*cuts.iter().next().unwrap()));
        assert!(toluene.atom(b.a).aromatic != toluene.atom(b.b).aromatic);
        assert!(cuttable_bonds(&parse_smiles("CCl").unwrap()).is_empty());
    }

    #[test]
    fn single_cut_of_ethanol() {
        let m = parse_smiles("CCO").unwrap();
        let cc = m.bond_between(0, 1).unwrap();
        let d = apply_cuts(&m, &BTreeSet::from([cc])).unwrap();
        assert_eq!(d.sorted_keys(), vec!["[*:1]C", "[*:1]CO"]);
        assert_eq!(d.connections.len(), 1);
        assert!(is_isomorphic(&d.reassemble().unwrap(), &m));
    }

    #[test]
    fn no_cuts_is_identity() {
        let m = parse_smiles("CCO").unwrap();
        let d = apply_cuts(&m, &BTreeSet::new()).unwrap();
        assert_eq!(d.fragments.len(), 1);
        assert!(d.connections.is_empty());
        assert_eq!(d.fragments[0].key(), "CCO");
    }

    #[test]
    fn ring_bond_cut_is_rejected() {
        let m = parse_smiles("C1CC1").unwrap();
        assert!(matches!(apply_cuts(&m, &BTreeSet::from([0])), Err(CoreError::InvalidCut(0))));
    }

    #[test]
    fn key_round_trips() {
        let f = Fragment::from_key("[*:1]CC([*:2])=O").unwrap();
        let again = Fragment::from_key(f.key()).unwrap();
        assert_eq!(f.num_sites(), 2);
        assert_eq!(again.sites(), f.sites());
        assert!(Fragment::from_key("[*:2]CC[*:3]").is_err());
        assert!(Fragment::from_key("[*:1][*:2]").is_err());
    }
}
