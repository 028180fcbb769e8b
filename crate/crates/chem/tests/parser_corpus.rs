mod common;

use std::collections::BTreeSet;

use fraglearn_chem::{is_isomorphic, parse_smiles, write_canonical, ChemError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS: &str = include_str!("../data/parser_corpus.smi");

fn corpus() -> Vec<&'static str> {
    CORPUS.lines().filter(|l| !l.is_empty()).collect()
}

#[test]
fn corpus_has_two_hundred_distinct_molecules() {
    let lines = corpus();
    assert_eq!(lines.len(), 200);
    let canon: BTreeSet<String> =
        lines.iter().map(|s| write_canonical(&parse_smiles(s).unwrap()).into_string()).collect();
    assert_eq!(canon.len(), 200);
}

#[test]
fn write_parse_write_is_a_fixed_point() {
    for s in corpus() {
        let m = parse_smiles(s).unwrap();
        let written = write_canonical(&m).into_string();
        let back = parse_smiles(&written).unwrap();
        assert!(is_isomorphic(&m, &back), "{s}");
        assert_eq!(write_canonical(&back).into_string(), written, "{s}");
    }
}

#[test]
fn hundred_permutations_per_molecule() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in corpus() {
        let m = parse_smiles(s).unwrap();
        let expected = write_canonical(&m).into_string();
        for _ in 0..100 {
            let p = common::permute(&m, &mut rng);
            assert_eq!(write_canonical(&p).into_string(), expected, "{s}");
        }
    }
}

const ALPHABET: &[u8] = b"CNOSPBFIcnosp()=#123456789%[]+-@/\\.*:H0lr ";

#[test]
fn mutated_corpus_yields_typed_errors() {
    let lines = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut rejected = 0;
    for i in 0..10_000 {
        let mut bytes = lines[i % lines.len()].as_bytes().to_vec();
        for _ in 0..rng.gen_range(1..5) {
            let c = ALPHABET[rng.gen_range(0..ALPHABET.len())];
            let at = rng.gen_range(0..=bytes.len());
            match rng.gen_range(0..4) {
                0 if at < bytes.len() => {
                    bytes.remove(at);
                }
                1 if at < bytes.len() => bytes[at] = c,
                2 => bytes.truncate(at),
                _ => bytes.insert(at, c),
            }
        }
        let text = String::from_utf8(bytes).unwrap();
        match parse_smiles(&text) {
            Ok(m) => {
                let w = write_canonical(&m).into_string();
                assert_eq!(write_canonical(&parse_smiles(&w).unwrap()).into_string(), w, "{text}");
            }
            Err(
                ChemError::Syntax { .. }
                | ChemError::UnsupportedFeature { .. }
                | ChemError::Valence { .. }
                | ChemError::MultiComponent,
            ) => rejected += 1,
            Err(e) => panic!("{text:?}: unexpected error kind {e:?}"),
        }
    }
    assert!(rejected > 1000);
}
