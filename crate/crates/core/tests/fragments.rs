mod common;

use std::collections::BTreeSet;

use fraglearn_chem::{is_isomorphic, parse_smiles, properties};
use fraglearn_core::{apply_cuts, cuttable_bonds, fragment_vocabulary, mfr_score, CoreError, Fragment, QParams, QTable};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cuttable_bond_rule() {
    assert_eq!(cuttable_bonds(&parse_smiles("CC").unwrap()).len(), 1);
    assert!(cuttable_bonds(&parse_smiles("c1ccccc1").unwrap()).is_empty());
    let toluene = parse_smiles("Cc1ccccc1").unwrap();
    let cuts = cuttable_bonds(&toluene);
    assert_eq!(cuts.len(), 1);
    let b = toluene.bond(*cuts.iter().next().unwrap());
    assert!(!toluene.is_ring_atom(b.a) || !toluene.is_ring_atom(b.b));
    assert!(toluene.is_ring_atom(b.a) || toluene.is_ring_atom(b.b));
    assert!(cuttable_bonds(&parse_smiles("CC=C").unwrap()).len() == 1);
    assert!(cuttable_bonds(&parse_smiles("CCl").unwrap()).is_empty());
}

#[test]
fn single_cut_of_ethanol() {
    let m = parse_smiles("CCO").unwrap();
    let cc = m.bond_between(0, 1).unwrap();
    let d = apply_cuts(&m, &BTreeSet::from([cc])).unwrap();
    assert_eq!(d.sorted_keys(), vec!["[*:1]C", "[*:1]CO"]);
    assert_eq!(d.connections.len(), 1);
    assert!(d.fragments.iter().all(|f| f.num_sites() == 1));
}

#[test]
fn empty_cut_set_is_identity() {
    let m = parse_smiles("C=CC(=O)OCC").unwrap();
    let d = apply_cuts(&m, &BTreeSet::new()).unwrap();
    assert_eq!(d.fragments.len(), 1);
    assert!(d.connections.is_empty());
    assert_eq!(d.fragments[0].num_sites(), 0);
}

#[test]
fn non_cuttable_bond_is_rejected() {
    let m = parse_smiles("c1ccccc1C").unwrap();
    assert!(matches!(apply_cuts(&m, &BTreeSet::from([0])), Err(CoreError::InvalidCut(0))));
}

#[test]
fn fifty_molecules_times_five_cut_sets_reassemble() {
    let corpus: Vec<_> = common::parser_corpus().into_iter().filter(|m| !cuttable_bonds(m).is_empty()).take(50).collect();
    assert_eq!(corpus.len(), 50);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in &corpus {
        let bonds: Vec<usize> = cuttable_bonds(m).into_iter().collect();
        for _ in 0..5 {
            let size = rng.gen_range(0..=bonds.len());
            let cuts: BTreeSet<usize> = sample(&mut rng, bonds.len(), size).into_iter().map(|i| bonds[i]).collect();
            let d = apply_cuts(m, &cuts).unwrap();
            assert_eq!(d.fragments.len(), cuts.len() + 1);
            assert_eq!(d.connections.len(), cuts.len());
            let heavy: usize = d.fragments.iter().map(|f| f.heavy_atom_count()).sum();
            assert_eq!(heavy, m.heavy_atom_count());
            let mw: f64 = d.fragments.iter().map(|f| properties(f.molecule()).mol_weight).sum();
            assert!((mw - properties(m).mol_weight).abs() < 1e-9);
            assert!(is_isomorphic(&d.reassemble().unwrap(), m));
        }
    }
}

#[test]
fn keys_reparse_to_the_same_fragment() {
    let q = QTable::new(QParams::default());
    for m in common::dataset("toy_drugs") {
        let cuts = cuttable_bonds(&m);
        let d = apply_cuts(&m, &cuts).unwrap();
        for f in &d.fragments {
            let again = Fragment::from_key(f.key()).unwrap();
            assert_eq!(again.key(), f.key());
            assert_eq!(again.num_sites(), f.num_sites());
            assert_eq!(mfr_score(&again, &q), mfr_score(f, &q));
        }
    }
}

#[test]
fn vocabulary_deduplicates() {
    let a = parse_smiles("CCO").unwrap();
    let b = parse_smiles("CCN").unwrap();
    let da = apply_cuts(&a, &BTreeSet::from([a.bond_between(0, 1).unwrap()])).unwrap();
    let db = apply_cuts(&b, &BTreeSet::from([b.bond_between(0, 1).unwrap()])).unwrap();
    let vocab = fragment_vocabulary([&da, &db]);
    assert_eq!(vocab.keys().cloned().collect::<Vec<_>>(), vec!["[*:1]C", "[*:1]CN", "[*:1]CO"]);
    assert!(fragment_vocabulary(std::iter::empty()).is_empty());
}

#[test]
fn vocabulary_is_bounded_by_fragment_total() {
    let decomps: Vec<_> =
        common::dataset("acrylates").iter().map(|m| apply_cuts(m, &cuttable_bonds(m)).unwrap()).collect();
    let total: usize = decomps.iter().map(|d| d.fragments.len()).sum();
    assert!(fragment_vocabulary(&decomps).len() <= total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_cut_subset_reassembles(idx in 0usize..200, mask in any::<u64>()) {
        let corpus = common::parser_corpus();
        let m = &corpus[idx];
        let bonds: Vec<usize> = cuttable_bonds(m).into_iter().collect();
        let cuts: BTreeSet<usize> = bonds.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, &b)| b).collect();
        let d = apply_cuts(m, &cuts).unwrap();
        prop_assert!(is_isomorphic(&d.reassemble().unwrap(), m));
        for f in &d.fragments {
            prop_assert!(f.sites().iter().all(|s| s.host < f.molecule().num_atoms()));
        }
    }
}
