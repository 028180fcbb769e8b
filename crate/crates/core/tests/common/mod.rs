#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use fraglearn_chem::Molecule;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn dataset(name: &str) -> Vec<Molecule> {
    fraglearn_chem::io::load_molecules(&data_path(&format!("{name}.smi"))).unwrap()
}

pub fn parser_corpus() -> Vec<Molecule> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../chem/data/parser_corpus.smi");
    fraglearn_chem::io::load_molecules(&path).unwrap()
}

/// Every molecule shipped with the repository.
pub fn all_molecules() -> Vec<Molecule> {
    let mut out = parser_corpus();
    for name in ["acrylates", "chain_extenders", "toy_drugs"] {
        out.extend(dataset(name));
    }
    out
}

pub fn smiles(mols: &[Molecule]) -> Vec<String> {
    mols.iter().map(|m| fraglearn_chem::write_canonical(m).into_string()).collect()
}
