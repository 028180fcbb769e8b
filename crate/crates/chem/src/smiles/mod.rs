//! SMILES reading and writing.
//!
//! Supported: the organic subset (B, C, N, O, P, S, F, Cl, Br, I), aromatic
//! lowercase atoms, bracket atoms with hydrogen count and charge, branches,
//! ring closures (including `%nn`), and `*` wildcards in fragment mode.
//! Stereo, isotopes, explicit `[H]` atoms and dot-disconnected input are
//! rejected.

mod parser;
pub(crate) mod writer;

use crate::error::ChemError;
use crate::molecule::Molecule;
use crate::substructure::Pattern;

/// Parses a complete molecule. Wildcards are rejected.
pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let raw = parser::parse_raw(text, false)?;
    parser::sanitize(&raw)
}

/// Parses a fragment: `*` and `[*:n]` attachment points are allowed.
pub fn parse_fragment(text: &str) -> Result<Molecule, ChemError> {
    let raw = parser::parse_raw(text, true)?;
    parser::sanitize(&raw)
}

/// Parses a substructure query.
///
/// Patterns that form a valid molecule are sanitized, so a Kekulé query
/// matches aromatic targets. Anything else is taken exactly as written.
/// Bracket atoms constrain hydrogen count and charge; `*` matches any atom.
pub fn parse_pattern(text: &str) -> Result<Pattern, ChemError> {
    let raw = parser::parse_raw(text, true)?;
    let constraints: Vec<Option<(u8, i8)>> = raw
        .atoms
        .iter()
        .map(|a| a.hydrogens.map(|h| (h, a.charge)))
        .collect();
    let graph = match parser::sanitize(&raw) {
        Ok(mol) => mol,
        Err(_) => parser::lenient(&raw)?,
    };
    Ok(Pattern::from_parts(text, graph, constraints))
}
