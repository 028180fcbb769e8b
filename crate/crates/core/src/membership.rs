//! Class membership predicates defined by substructure counts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fraglearn_chem::{count_matches, parse_pattern, Molecule, Pattern};

use crate::error::{CoreError, Result};

const SHIPPED: &str = include_str!("../data/membership.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRule {
    pub pattern: String,
    #[serde(default = "one")]
    pub min_count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub rules: Vec<MembershipRule>,
}

#[derive(Debug, Deserialize)]
struct ClassFile {
    class: Vec<ClassSpec>,
}

/// A compiled class: a molecule is a member when any rule is satisfied.
#[derive(Debug, Clone)]
pub struct MembershipClass {
    pub name: String,
    rules: Vec<(Pattern, usize)>,
}

impl MembershipClass {
    pub fn compile(spec: &ClassSpec) -> Result<Self> {
        let rules = spec
            .rules
            .iter()
            .map(|r| Ok((parse_pattern(&r.pattern)?, r.min_count.max(1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(MembershipClass { name: spec.name.clone(), rules })
    }

    /// Single-rule class.
    pub fn from_pattern(pattern: &str) -> Result<Self> {
        Self::compile(&ClassSpec {
            name: pattern.to_string(),
            rules: vec![MembershipRule { pattern: pattern.to_string(), min_count: 1 }],
        })
    }

    pub fn contains(&self, mol: &Molecule) -> bool {
        self.rules.iter().any(|(p, min)| {
            if *min == 1 {
                p.matches(mol)
            } else {
                count_matches(p, mol) >= *min
            }
        })
    }
}

pub fn parse_classes(text: &str) -> Result<Vec<MembershipClass>> {
    let file: ClassFile = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
    file.class.iter().map(MembershipClass::compile).collect()
}

pub fn load_classes(path: &Path) -> Result<Vec<MembershipClass>> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    parse_classes(&text)
}

/// Classes shipped with the crate ("acrylates", "chain_extenders").
pub fn shipped_classes() -> Vec<MembershipClass> {
    parse_classes(SHIPPED).expect("shipped membership file is valid")
}

pub fn shipped_class(name: &str) -> Option<MembershipClass> {
    shipped_classes().into_iter().find(|c| c.name == name)
}
