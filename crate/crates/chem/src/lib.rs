//! Molecular graph substrate.
//!
//! Parses a practical subset of SMILES into valence-checked molecular graphs,
//! writes canonical SMILES, perceives rings and aromaticity, and provides the
//! cheminformatics primitives used by the generator and the metric suite:
//! Morgan fingerprints, Tanimoto similarity, substructure search, scalar
//! descriptors and Bemis-Murcko scaffolds.

mod aromaticity;
mod canon;
mod element;
mod error;
pub mod fingerprint;
pub mod io;
mod kekule;
mod molecule;
pub mod properties;
mod rings;
pub mod scaffold;
pub mod smiles;
pub mod substructure;

pub use canon::{canonical_ranking, write_canonical, CanonicalSmiles};
pub use element::Element;
pub use error::ChemError;
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint};
pub use molecule::{Atom, Bond, BondOrder, Molecule};
pub use properties::{lipinski_pass, properties, LogPTable, PropertyVector};
pub use scaffold::murcko_scaffold;
pub use smiles::{parse_fragment, parse_pattern, parse_smiles};
pub use substructure::{all_matches, count_matches, find_match, is_isomorphic, match_substructure, Pattern};
