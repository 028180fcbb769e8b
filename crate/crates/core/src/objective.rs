//! Weighted objective terms and molecule scoring.
//!
//! The individual score is `clamp(1 - B + matched_bonuses - penalties, 0, 1)`
//! where `B` is the total weight of all bonus terms, so a molecule matching
//! every bonus and violating nothing scores 1.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fraglearn_chem::{morgan_fingerprint, parse_pattern, properties, tanimoto, Fingerprint, Molecule, Pattern, PropertyVector};

use crate::error::{CoreError, Result};
use crate::proxies::PropertyProvider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Mw,
    Logp,
    Hbd,
    Hba,
    RotatableBonds,
    Qed,
    Sa,
}

impl Property {
    pub const ALL: [Property; 7] =
        [Property::Mw, Property::Logp, Property::Hbd, Property::Hba, Property::RotatableBonds, Property::Qed, Property::Sa];

    pub fn name(self) -> &'static str {
        match self {
            Property::Mw => "mw",
            Property::Logp => "logp",
            Property::Hbd => "hbd",
            Property::Hba => "hba",
            Property::RotatableBonds => "rotatable_bonds",
            Property::Qed => "qed",
            Property::Sa => "sa",
        }
    }

    /// Hinge width used when a term does not set one.
    pub fn default_width(self) -> f64 {
        match self {
            Property::Mw => 100.0,
            _ => 1.0,
        }
    }

    pub fn value(self, p: &PropertyVector, mol: &Molecule, provider: &dyn PropertyProvider) -> f64 {
        match self {
            Property::Mw => p.mol_weight,
            Property::Logp => p.logp,
            Property::Hbd => p.hbd as f64,
            Property::Hba => p.hba as f64,
            Property::RotatableBonds => p.rotatable_bonds as f64,
            Property::Qed => provider.qed(mol),
            Property::Sa => provider.sa(mol),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let p = match lower.as_str() {
            "mw" | "mol_weight" | "molecular_weight" => Property::Mw,
            "logp" => Property::Logp,
            "hbd" => Property::Hbd,
            "hba" => Property::Hba,
            "rotatable_bonds" | "rotb" => Property::RotatableBonds,
            "qed" => Property::Qed,
            "sa" => Property::Sa,
            _ => return Err(CoreError::UnknownTerm(s.to_string())),
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Penalize values above the threshold.
    #[default]
    Above,
    /// Penalize values below the threshold.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// Full weight once the threshold is crossed.
    #[default]
    Hard,
    /// Weight scaled by `min(1, excess / width)`.
    Hinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    PropertyPenalty {
        property: Property,
        threshold: f64,
        #[serde(default)]
        direction: Direction,
        #[serde(default)]
        mode: PenaltyMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
    },
    SubstructurePenalty {
        pattern: String,
    },
    SubstructureBonus {
        pattern: String,
    },
    DiversityGroup,
    SynthesizabilityProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub name: String,
    pub weight: f64,
    #[serde(flatten)]
    pub kind: TermKind,
    /// Feedback ids that created or changed this term.
    #[serde(default)]
    pub provenance: Vec<String>,
}

impl ObjectiveTerm {
    pub fn new(name: impl Into<String>, weight: f64, kind: TermKind) -> Self {
        ObjectiveTerm { name: name.into(), weight, kind, provenance: Vec::new() }
    }

    pub fn property_penalty(property: Property, threshold: f64, weight: f64) -> Self {
        ObjectiveTerm::new(
            property.name(),
            weight,
            TermKind::PropertyPenalty { property, threshold, direction: Direction::Above, mode: PenaltyMode::Hard, width: None },
        )
    }

    pub fn diversity(weight: f64) -> Self {
        ObjectiveTerm::new("diversity", weight, TermKind::DiversityGroup)
    }

    pub fn synthesizability(weight: f64) -> Self {
        ObjectiveTerm::new("synthesizability", weight, TermKind::SynthesizabilityProxy)
    }

    pub fn substructure_penalty(pattern: &str, weight: f64) -> Self {
        ObjectiveTerm::new(format!("penalize:{pattern}"), weight, TermKind::SubstructurePenalty { pattern: pattern.into() })
    }

    pub fn substructure_bonus(pattern: &str, weight: f64) -> Self {
        ObjectiveTerm::new(format!("reward:{pattern}"), weight, TermKind::SubstructureBonus { pattern: pattern.into() })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub version: u32,
    pub terms: Vec<ObjectiveTerm>,
}

impl ObjectiveSpec {
    pub fn empty() -> Self {
        ObjectiveSpec::default()
    }

    /// Hard penalties on MW > 500 and logP > 5.
    pub fn drug_like() -> Self {
        ObjectiveSpec {
            version: 0,
            terms: vec![
                ObjectiveTerm::property_penalty(Property::Mw, 500.0, 0.5),
                ObjectiveTerm::property_penalty(Property::Logp, 5.0, 0.5),
            ],
        }
    }

    /// Synthesizability and diversity.
    pub fn monomer() -> Self {
        ObjectiveSpec { version: 0, terms: vec![ObjectiveTerm::synthesizability(0.5), ObjectiveTerm::diversity(0.5)] }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "empty" | "none" => Ok(Self::empty()),
            "drug_like" | "internal" => Ok(Self::drug_like()),
            "monomer" => Ok(Self::monomer()),
            _ => Err(CoreError::Config(format!("unknown objective preset '{name}'"))),
        }
    }

    pub fn term(&self, name: &str) -> Option<&ObjectiveTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn term_mut(&mut self, name: &str) -> Option<&mut ObjectiveTerm> {
        self.terms.iter_mut().find(|t| t.name == name)
    }

    /// The penalty term on `property`, if any.
    pub fn threshold_term(&self, property: Property) -> Option<&ObjectiveTerm> {
        self.terms.iter().find(|t| matches!(t.kind, TermKind::PropertyPenalty { property: p, .. } if p == property))
    }

    pub fn threshold(&self, property: Property) -> Option<f64> {
        self.threshold_term(property).and_then(|t| match t.kind {
            TermKind::PropertyPenalty { threshold, .. } => Some(threshold),
            _ => None,
        })
    }

    pub fn diversity_weight(&self) -> f64 {
        self.terms.iter().filter(|t| t.kind == TermKind::DiversityGroup).map(|t| t.weight).sum()
    }

    /// True when every weight is zero, so scores carry no signal.
    pub fn is_inert(&self) -> bool {
        self.terms.iter().all(|t| t.weight == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(CoreError::Config(format!("term '{}' has invalid weight {}", t.name, t.weight)));
            }
            match &t.kind {
                TermKind::PropertyPenalty { threshold, width, .. } => {
                    if !threshold.is_finite() || width.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
                        return Err(CoreError::Config(format!("term '{}' has invalid threshold or width", t.name)));
                    }
                }
                TermKind::SubstructurePenalty { pattern } | TermKind::SubstructureBonus { pattern } => {
                    parse_pattern(pattern)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn compile<'a>(&self, provider: &'a dyn PropertyProvider) -> Result<Scorer<'a>> {
        Scorer::new(self, provider)
    }
}

enum Compiled {
    Property { property: Property, threshold: f64, direction: Direction, mode: PenaltyMode, width: f64 },
    Penalty(Pattern),
    Bonus(Pattern),
    Synthesizability,
    Group,
}

/// An objective with patterns parsed once, ready to score many molecules.
pub struct Scorer<'a> {
    terms: Vec<(f64, Compiled)>,
    provider: &'a dyn PropertyProvider,
    bonus_total: f64,
    diversity_weight: f64,
}

impl<'a> Scorer<'a> {
    pub fn new(spec: &ObjectiveSpec, provider: &'a dyn PropertyProvider) -> Result<Self> {
        spec.validate()?;
        let mut terms = Vec::with_capacity(spec.terms.len());
        for t in &spec.terms {
            let compiled = match &t.kind {
                TermKind::PropertyPenalty { property, threshold, direction, mode, width } => Compiled::Property {
                    property: *property,
                    threshold: *threshold,
                    direction: *direction,
                    mode: *mode,
                    width: width.unwrap_or(property.default_width()),
                },
                TermKind::SubstructurePenalty { pattern } => Compiled::Penalty(parse_pattern(pattern)?),
                TermKind::SubstructureBonus { pattern } => Compiled::Bonus(parse_pattern(pattern)?),
                TermKind::SynthesizabilityProxy => Compiled::Synthesizability,
                TermKind::DiversityGroup => Compiled::Group,
            };
            terms.push((t.weight, compiled));
        }
        let bonus_total = terms.iter().filter(|(_, c)| matches!(c, Compiled::Bonus(_))).map(|(w, _)| w).sum();
        Ok(Scorer { terms, provider, bonus_total, diversity_weight: spec.diversity_weight() })
    }

    pub fn provider(&self) -> &dyn PropertyProvider {
        self.provider
    }

    pub fn score_with(&self, mol: &Molecule, props: &PropertyVector) -> f64 {
        let mut score = 1.0 - self.bonus_total;
        for (w, term) in &self.terms {
            score += match term {
                Compiled::Property { property, threshold, direction, mode, width } => {
                    let v = property.value(props, mol, self.provider);
                    let excess = match direction {
                        Direction::Above => v - threshold,
                        Direction::Below => threshold - v,
                    };
                    if excess <= 0.0 {
                        0.0
                    } else {
                        match mode {
                            PenaltyMode::Hard => -w,
                            PenaltyMode::Hinge => -w * (excess / width).min(1.0),
                        }
                    }
                }
                Compiled::Penalty(p) if p.matches(mol) => -w,
                Compiled::Bonus(p) if p.matches(mol) => *w,
                Compiled::Synthesizability => -w * (self.provider.sa(mol) - 1.0) / 9.0,
                _ => 0.0,
            };
        }
        score.clamp(0.0, 1.0)
    }

    pub fn score(&self, mol: &Molecule) -> f64 {
        self.score_with(mol, &properties(mol))
    }

    /// Per molecule: diversity weight times its mean Tanimoto distance to the
    /// rest of the batch (0 for a singleton).
    pub fn score_group(&self, batch: &[Molecule]) -> Vec<f64> {
        if self.diversity_weight == 0.0 {
            return vec![0.0; batch.len()];
        }
        let fps: Vec<Fingerprint> = batch.par_iter().map(default_fingerprint).collect();
        mean_distances(&fps).into_iter().map(|d| self.diversity_weight * d).collect()
    }
}

pub fn default_fingerprint(mol: &Molecule) -> Fingerprint {
    morgan_fingerprint(mol, fraglearn_chem::fingerprint::DEFAULT_RADIUS, fraglearn_chem::fingerprint::DEFAULT_WIDTH)
}

/// Mean Tanimoto distance from each fingerprint to all others.
pub fn mean_distances(fps: &[Fingerprint]) -> Vec<f64> {
    let n = fps.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let total: f64 = (0..n).filter(|&j| j != i).map(|j| 1.0 - tanimoto(&fps[i], &fps[j]).expect("same width")).sum();
            total / (n - 1) as f64
        })
        .collect()
}

pub fn score_individual(mol: &Molecule, spec: &ObjectiveSpec, provider: &dyn PropertyProvider) -> Result<f64> {
    Ok(Scorer::new(spec, provider)?.score(mol))
}

pub fn score_group(batch: &[Molecule], spec: &ObjectiveSpec, provider: &dyn PropertyProvider) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(CoreError::EmptyBatch);
    }
    Ok(Scorer::new(spec, provider)?.score_group(batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxies::ProxyProvider;
    use fraglearn_chem::parse_smiles;

    fn mol(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn empty_spec_scores_one() {
        let p = ProxyProvider::new();
        assert_eq!(score_individual(&mol("CCO"), &ObjectiveSpec::empty(), &p).unwrap(), 1.0);
    }

    #[test]
    fn heavy_molecule_is_penalized() {
        let p = ProxyProvider::new();
        let spec = ObjectiveSpec::drug_like();
        let heavy = "CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC(O)=O";
        let m = mol(heavy);
        assert!(properties(&m).mol_weight > 500.0);
        assert!(score_individual(&m, &spec, &p).unwrap() < score_individual(&mol("CCCCO"), &spec, &p).unwrap());
    }

    #[test]
    fn bonus_restores_baseline() {
        let p = ProxyProvider::new();
        let spec = ObjectiveSpec { version: 0, terms: vec![ObjectiveTerm::substructure_bonus("C=CC(=O)O", 0.3)] };
        let s = Scorer::new(&spec, &p).unwrap();
        assert_eq!(s.score(&mol("C=CC(=O)OC")), 1.0);
        assert!((s.score(&mol("CCOC")) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn hinge_scales_with_excess() {
        let p = ProxyProvider::new();
        let mut term = ObjectiveTerm::property_penalty(Property::Mw, 40.0, 1.0);
        if let TermKind::PropertyPenalty { mode, width, .. } = &mut term.kind {
            *mode = PenaltyMode::Hinge;
            *width = Some(10.0);
        }
        let spec = ObjectiveSpec { version: 0, terms: vec![term] };
        let ethanol = mol("CCO");
        let expected = 1.0 - (properties(&ethanol).mol_weight - 40.0) / 10.0;
        assert!((score_individual(&ethanol, &spec, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn serde_shape() {
        let spec = ObjectiveSpec::drug_like();
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["terms"][0]["kind"], "property_penalty");
        assert_eq!(json["terms"][0]["property"], "mw");
        let back: ObjectiveSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }
}
