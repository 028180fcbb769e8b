//! SMILES text files: one molecule per line, optional name after whitespace,
//! blank lines ignored. `#` starts a comment only at the beginning of a line
//! or of a whitespace-separated token, since it is also the triple bond.

use std::path::Path;

use crate::error::ChemError;
use crate::molecule::Molecule;
use crate::smiles::parse_smiles;

/// SMILES strings from file contents with their 1-based line numbers.
pub fn smiles_lines(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let token = line.split_whitespace().next()?;
            if token.starts_with('#') {
                return None;
            }
            Some((i + 1, token.to_string()))
        })
        .collect()
}

pub fn read_smiles_file(path: &Path) -> Result<Vec<String>, ChemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ChemError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Ok(smiles_lines(&text).into_iter().map(|(_, s)| s).collect())
}

/// Parses every entry; the first failure is reported with its line number.
pub fn load_molecules(path: &Path) -> Result<Vec<Molecule>, ChemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ChemError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_lines(&text).map_err(|(line, e)| ChemError::Io {
        path: path.display().to_string(),
        message: format!("line {line}: {e}"),
    })
}

pub fn parse_lines(text: &str) -> Result<Vec<Molecule>, (usize, ChemError)> {
    smiles_lines(text)
        .into_iter()
        .map(|(line, s)| parse_smiles(&s).map_err(|e| (line, e)))
        .collect()
}

pub fn write_smiles_file<S: AsRef<str>>(path: &Path, smiles: &[S]) -> Result<(), ChemError> {
    let mut out = String::new();
    for s in smiles {
        out.push_str(s.as_ref());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| ChemError::Io { path: path.display().to_string(), message: e.to_string() })
}
