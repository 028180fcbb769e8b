//! Feedback-driven objective tuning.
//!
//! A feedback record passes through fixed stages: sufficiency check,
//! clarification questions, rule extraction into the knowledge base, and
//! objective modification. Free text is translated by a pluggable
//! [`Reasoner`]; everything else is deterministic.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fraglearn_chem::{parse_pattern, properties, Molecule};

use crate::error::{CoreError, Result};
use crate::metrics::internal_diversity;
use crate::objective::{default_fingerprint, Direction, ObjectiveSpec, ObjectiveTerm, Property, TermKind};
use crate::proxies::PropertyProvider;

pub const KB_FORMAT_VERSION: u32 = 1;

/// Terms that `AdjustWeight` may create when absent.
pub const CREATABLE_TERMS: [&str; 4] = ["diversity", "synthesizability", "mw", "logp"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackItem {
    AdjustWeight {
        term: String,
        delta: f64,
    },
    SetThreshold {
        property: Property,
        value: f64,
    },
    PenalizeSubstructure {
        pattern: String,
        #[serde(alias = "lambda")]
        weight: f64,
    },
    RewardSubstructure {
        pattern: String,
        #[serde(alias = "lambda")]
        weight: f64,
    },
    FreeText {
        text: String,
    },
    /// Reviewed and found nothing to change.
    NoOp,
}

impl FeedbackItem {
    pub fn is_structured(&self) -> bool {
        !matches!(self, FeedbackItem::FreeText { .. } | FeedbackItem::NoOp)
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            FeedbackItem::AdjustWeight { delta, .. } => vec![*delta],
            FeedbackItem::SetThreshold { value, .. } => vec![*value],
            FeedbackItem::PenalizeSubstructure { weight, .. } | FeedbackItem::RewardSubstructure { weight, .. } => vec![*weight],
            _ => Vec::new(),
        }
    }

    /// Numbers must be finite.
    pub fn validate(&self) -> Result<()> {
        if self.numbers().iter().any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidFeedback(format!("{} has a non-finite number", self.describe())));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            FeedbackItem::AdjustWeight { term, delta } => format!("adjust weight of '{term}' by {delta:+}"),
            FeedbackItem::SetThreshold { property, value } => format!("set {property} threshold to {value}"),
            FeedbackItem::PenalizeSubstructure { pattern, weight } => format!("penalize '{pattern}' with weight {weight}"),
            FeedbackItem::RewardSubstructure { pattern, weight } => format!("reward '{pattern}' with weight {weight}"),
            FeedbackItem::FreeText { text } => format!("comment \"{text}\""),
            FeedbackItem::NoOp => "no change".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    #[default]
    Human,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRecord {
    pub id: String,
    #[serde(default)]
    pub round: u32,
    #[serde(default)]
    pub author: Author,
    pub items: Vec<FeedbackItem>,
}

impl FeedbackRecord {
    /// Schema checks: non-empty, finite numbers, non-empty id.
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(CoreError::InvalidFeedback("feedback id is empty".into()));
        }
        if self.items.is_empty() {
            return Err(CoreError::InvalidFeedback("feedback has no items".into()));
        }
        for (i, item) in self.items.iter().enumerate() {
            if let Err(CoreError::InvalidFeedback(m)) = item.validate() {
                return Err(CoreError::InvalidFeedback(format!("item {i}: {m}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistilledRule {
    pub origin: Vec<String>,
    pub rule: FeedbackItem,
    pub confidence: f64,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Version produced by this change.
    pub version: u32,
    pub source: String,
    pub round: u32,
    pub rules: Vec<FeedbackItem>,
    pub changes: Vec<String>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub round: u32,
    pub stage: String,
    pub input_digest: String,
    pub decision: String,
}

/// Append-only store of distilled rules and objective changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub version: u32,
    /// Objective before any recorded change.
    pub base: ObjectiveSpec,
    pub rules: Vec<DistilledRule>,
    pub history: Vec<HistoryEntry>,
    #[serde(default)]
    pub events: Vec<EventRecord>,
}

impl KnowledgeBase {
    pub fn new(base: ObjectiveSpec) -> Self {
        KnowledgeBase { version: KB_FORMAT_VERSION, base, rules: Vec::new(), history: Vec::new(), events: Vec::new() }
    }

    /// Adds a rule, merging with an identical one by keeping the higher
    /// confidence. Returns the stored rule.
    pub fn add_rule(&mut self, rule: DistilledRule) -> DistilledRule {
        if let Some(existing) = self.rules.iter_mut().find(|r| r.rule == rule.rule) {
            existing.confidence = existing.confidence.max(rule.confidence);
            for o in rule.origin {
                if !existing.origin.contains(&o) {
                    existing.origin.push(o);
                }
            }
            return existing.clone();
        }
        self.rules.push(rule.clone());
        rule
    }

    /// Rebuilds the current objective from `base` and the history.
    pub fn replay(&self, cfg: &TuningConfig) -> Result<ObjectiveSpec> {
        let mut spec = self.base.clone();
        for entry in &self.history {
            let rules: Vec<DistilledRule> = entry
                .rules
                .iter()
                .map(|r| DistilledRule { origin: vec![entry.source.clone()], rule: r.clone(), confidence: 1.0, round: entry.round })
                .collect();
            spec = apply_to_objective(&rules, &spec, cfg)?.0;
        }
        Ok(spec)
    }

    pub fn log(&mut self, round: u32, stage: &str, input: &impl Serialize, decision: impl Into<String>) {
        let text = serde_json::to_string(input).unwrap_or_default();
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        self.events.push(EventRecord { round, stage: stage.into(), input_digest: digest[..16].to_string(), decision: decision.into() });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("knowledge base serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::config::digest_json(&serde_json::to_value(self).expect("knowledge base serializes"))
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CoreError::io(path, e))
    }

    pub fn restore(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let kb: KnowledgeBase = serde_json::from_str(&text).map_err(|e| CoreError::format(path, e))?;
        if kb.version != KB_FORMAT_VERSION {
            return Err(CoreError::FormatVersionMismatch { expected: KB_FORMAT_VERSION, found: kb.version });
        }
        Ok(kb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonerKind {
    None,
    #[default]
    Keyword,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemistConfig {
    /// Rules the simulated reviewer holds in addition to the knowledge base.
    pub persona: Vec<FeedbackItem>,
    /// Share of reviewed molecules that must violate a rule before it fires.
    pub violation_share: f64,
    /// Mean pairwise distance below which more diversity is requested.
    pub diversity_floor: f64,
    /// Weight added when strengthening a term.
    pub weight_step: f64,
}

impl Default for ChemistConfig {
    fn default() -> Self {
        ChemistConfig { persona: Vec::new(), violation_share: 0.2, diversity_floor: 0.7, weight_step: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    /// Weight changes smaller than this are not novel.
    pub noise_floor: f64,
    pub lambda_max: f64,
    /// Rules below this confidence wait for operator approval when a human reviews.
    pub approval_threshold: f64,
    /// Weight of penalty terms created by `SetThreshold`.
    pub default_penalty_weight: f64,
    pub reasoner: ReasonerKind,
    pub reasoner_url: Option<String>,
    /// Environment variable holding the reasoner credential.
    pub reasoner_credential_env: String,
    pub reasoner_timeout_ms: u64,
    pub chemist: ChemistConfig,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            noise_floor: 0.01,
            lambda_max: 5.0,
            approval_threshold: 0.5,
            default_penalty_weight: 0.5,
            reasoner: ReasonerKind::Keyword,
            reasoner_url: None,
            reasoner_credential_env: "FRAGLEARN_REASONER_TOKEN".into(),
            reasoner_timeout_ms: 5000,
            chemist: ChemistConfig::default(),
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return Err(CoreError::Config("tuning.lambda_max must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.approval_threshold) || !(0.0..=1.0).contains(&self.chemist.violation_share) {
            return Err(CoreError::Config("tuning shares must lie in [0, 1]".into()));
        }
        if self.reasoner == ReasonerKind::Http && self.reasoner_url.is_none() {
            return Err(CoreError::Config("tuning.reasoner = \"http\" needs tuning.reasoner_url".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub items: Vec<FeedbackItem>,
    pub confidence: f64,
}

/// Turns free text into structured items.
pub trait Reasoner: Send + Sync {
    fn translate(&self, text: &str, spec: &ObjectiveSpec, kb: &KnowledgeBase) -> Result<Translation>;
}

/// Phrase table mapping common requests onto structured items.
#[derive(Debug, Clone, Default)]
pub struct KeywordReasoner;

pub const NITRO_PATTERN: &str = "[N+](=O)[O-]";

impl Reasoner for KeywordReasoner {
    fn translate(&self, text: &str, _spec: &ObjectiveSpec, _kb: &KnowledgeBase) -> Result<Translation> {
        let t = text.to_ascii_lowercase();
        let has = |words: &[&str]| words.iter().any(|w| t.contains(w));
        let mut items = Vec::new();
        if has(&["too heavy", "too large", "too big", "lighter", "smaller"]) {
            items.push(FeedbackItem::SetThreshold { property: Property::Mw, value: 450.0 });
        }
        if has(&["more diverse", "too similar", "diversity", "more variety"]) {
            items.push(FeedbackItem::AdjustWeight { term: "diversity".into(), delta: 0.2 });
        }
        if has(&["lipophilic", "greasy", "logp too high", "too hydrophobic"]) {
            items.push(FeedbackItem::SetThreshold { property: Property::Logp, value: 4.0 });
        }
        if has(&["hard to make", "hard to synthesize", "synthesizab", "too complex"]) {
            items.push(FeedbackItem::AdjustWeight { term: "synthesizability".into(), delta: 0.2 });
        }
        if has(&["nitro"]) {
            items.push(FeedbackItem::PenalizeSubstructure { pattern: NITRO_PATTERN.into(), weight: 0.5 });
        }
        let confidence = if items.is_empty() { 0.0 } else { 0.8 };
        Ok(Translation { items, confidence })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonKind {
    UnstructuredWithoutReasoner,
    NotNovel,
    UnparseablePattern,
    UnknownTerm,
    Untranslatable,
    ReasonerFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reason {
    /// Offending item, when the reason concerns a single item.
    pub item: Option<usize>,
    pub kind: ReasonKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvaluation {
    pub sufficient: bool,
    pub reasons: Vec<Reason>,
}

/// Whether a structured item would leave the objective unchanged.
fn not_novel(item: &FeedbackItem, spec: &ObjectiveSpec, floor: f64) -> bool {
    match item {
        FeedbackItem::AdjustWeight { term, delta } => spec.term(term).is_some() && delta.abs() < floor,
        FeedbackItem::SetThreshold { property, value } => spec.threshold(*property).is_some_and(|t| (t - value).abs() < floor),
        FeedbackItem::PenalizeSubstructure { weight, .. } | FeedbackItem::RewardSubstructure { weight, .. } => weight.abs() < floor,
        _ => false,
    }
}

fn creatable(term: &str) -> bool {
    CREATABLE_TERMS.contains(&term)
}

pub fn eval_feedback(f: &FeedbackRecord, spec: &ObjectiveSpec, has_reasoner: bool, cfg: &TuningConfig) -> FeedbackEvaluation {
    let mut reasons = Vec::new();
    let free_text_only = f.items.iter().all(|i| matches!(i, FeedbackItem::FreeText { .. }));
    if free_text_only && !has_reasoner {
        reasons.push(Reason {
            item: None,
            kind: ReasonKind::UnstructuredWithoutReasoner,
            message: "unstructured without reasoner".into(),
        });
    }
    for (i, item) in f.items.iter().enumerate() {
        match item {
            FeedbackItem::PenalizeSubstructure { pattern, .. } | FeedbackItem::RewardSubstructure { pattern, .. } => {
                if let Err(e) = parse_pattern(pattern) {
                    reasons.push(Reason {
                        item: Some(i),
                        kind: ReasonKind::UnparseablePattern,
                        message: format!("item {i}: pattern '{pattern}' does not parse ({e})"),
                    });
                    continue;
                }
            }
            FeedbackItem::AdjustWeight { term, .. } if spec.term(term).is_none() && !creatable(term) => {
                reasons.push(Reason {
                    item: Some(i),
                    kind: ReasonKind::UnknownTerm,
                    message: format!("item {i}: unknown objective term '{term}'"),
                });
                continue;
            }
            _ => {}
        }
        if not_novel(item, spec, cfg.noise_floor) {
            reasons.push(Reason {
                item: Some(i),
                kind: ReasonKind::NotNovel,
                message: format!("item {i}: {} does not change the objective", item.describe()),
            });
        }
    }
    FeedbackEvaluation { sufficient: reasons.is_empty(), reasons }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClarificationExchange {
    pub questions: Vec<String>,
    #[serde(default)]
    pub answers: Vec<FeedbackItem>,
    #[serde(default)]
    pub resolved: bool,
}

fn question_for(f: &FeedbackRecord, reason: &Reason) -> String {
    let item = reason.item.and_then(|i| f.items.get(i));
    match (reason.kind, item) {
        (ReasonKind::UnstructuredWithoutReasoner, _) => {
            "Free-text comments cannot be interpreted automatically. Which objective term, threshold or substructure should change, and by how much?".into()
        }
        (ReasonKind::UnparseablePattern, Some(FeedbackItem::PenalizeSubstructure { pattern, .. } | FeedbackItem::RewardSubstructure { pattern, .. })) => {
            format!("The substructure '{pattern}' could not be read. Could you restate it as a SMILES pattern?")
        }
        (ReasonKind::UnknownTerm, Some(FeedbackItem::AdjustWeight { term, .. })) => {
            format!("There is no objective term called '{term}'. Which existing term did you mean?")
        }
        (ReasonKind::NotNovel, Some(item)) => {
            format!("The request to {} matches the current objective. What should change instead?", item.describe())
        }
        (ReasonKind::Untranslatable, Some(FeedbackItem::FreeText { text })) => {
            format!("The comment \"{text}\" did not map to a change. Which property or substructure does it concern?")
        }
        (ReasonKind::ReasonerFailed, _) => format!("The comment could not be processed ({}). Could you restate it as a structured change?", reason.message),
        _ => format!("Could you clarify: {}?", reason.message),
    }
}

/// One question per reason, skipping questions already asked in `history`.
pub fn make_queries(f: &FeedbackRecord, reasons: &[Reason], history: &[ClarificationExchange]) -> ClarificationExchange {
    let asked: BTreeSet<&str> = history.iter().flat_map(|h| h.questions.iter().map(String::as_str)).collect();
    let mut questions: Vec<String> = Vec::new();
    for r in reasons {
        let q = question_for(f, r);
        if !asked.contains(q.as_str()) && !questions.contains(&q) {
            questions.push(q);
        }
    }
    ClarificationExchange { questions, answers: Vec::new(), resolved: false }
}

/// Converts a resolved conversation into rules and stores them in the
/// knowledge base. `translated` carries reasoner output for free-text items.
pub fn extract_knowledge(
    f: &FeedbackRecord,
    exchanges: &[ClarificationExchange],
    translated: &[Translation],
    kb: &mut KnowledgeBase,
) -> Vec<DistilledRule> {
    let mut found: Vec<(FeedbackItem, f64)> = Vec::new();
    for item in f.items.iter().chain(exchanges.iter().flat_map(|e| e.answers.iter())) {
        if item.is_structured() {
            found.push((item.clone(), 1.0));
        }
    }
    for t in translated {
        found.extend(t.items.iter().filter(|i| i.is_structured()).map(|i| (i.clone(), t.confidence.clamp(0.0, 1.0))));
    }
    let mut out: Vec<DistilledRule> = Vec::new();
    for (rule, confidence) in found {
        let stored = kb.add_rule(DistilledRule { origin: vec![f.id.clone()], rule, confidence, round: f.round });
        match out.iter_mut().find(|r| r.rule == stored.rule) {
            Some(r) => r.confidence = r.confidence.max(stored.confidence),
            None => out.push(DistilledRule { confidence: confidence.max(0.0), ..stored }),
        }
    }
    out
}

fn add_provenance(term: &mut ObjectiveTerm, origin: &[String]) {
    for o in origin {
        if !term.provenance.contains(o) {
            term.provenance.push(o.clone());
        }
    }
}

fn new_property_term(property: Property, threshold: f64, weight: f64) -> ObjectiveTerm {
    let mut t = ObjectiveTerm::property_penalty(property, threshold, weight);
    if property == Property::Qed {
        if let TermKind::PropertyPenalty { direction, .. } = &mut t.kind {
            *direction = Direction::Below;
        }
    }
    t
}

/// Applies rules to a copy of `spec`. An empty rule list returns the spec
/// unchanged; otherwise the version increases by one. Also returns a
/// human-readable list of changes.
pub fn apply_to_objective(rules: &[DistilledRule], spec: &ObjectiveSpec, cfg: &TuningConfig) -> Result<(ObjectiveSpec, Vec<String>)> {
    let applicable: Vec<&DistilledRule> = rules.iter().filter(|r| r.rule.is_structured()).collect();
    if applicable.is_empty() {
        return Ok((spec.clone(), Vec::new()));
    }
    let mut out = spec.clone();
    let mut changes = Vec::new();
    let clamp = |w: f64| w.clamp(0.0, cfg.lambda_max);
    for r in applicable {
        match &r.rule {
            FeedbackItem::AdjustWeight { term, delta } => {
                if out.term(term).is_none() {
                    let created = match term.as_str() {
                        "diversity" => ObjectiveTerm::diversity(0.0),
                        "synthesizability" => ObjectiveTerm::synthesizability(0.0),
                        "mw" => new_property_term(Property::Mw, 500.0, 0.0),
                        "logp" => new_property_term(Property::Logp, 5.0, 0.0),
                        _ => return Err(CoreError::UnknownTerm(term.clone())),
                    };
                    changes.push(format!("added term '{term}'"));
                    out.terms.push(created);
                }
                let t = out.term_mut(term).expect("present");
                let before = t.weight;
                t.weight = clamp(t.weight + delta);
                add_provenance(t, &r.origin);
                changes.push(format!("{term}: weight {before} -> {}", t.weight));
            }
            FeedbackItem::SetThreshold { property, value } => {
                let existing = out.terms.iter_mut().find(|t| matches!(t.kind, TermKind::PropertyPenalty { property: p, .. } if p == *property));
                match existing {
                    Some(t) => {
                        if let TermKind::PropertyPenalty { threshold, .. } = &mut t.kind {
                            changes.push(format!("{property}: threshold {threshold} -> {value}"));
                            *threshold = *value;
                        }
                        add_provenance(t, &r.origin);
                    }
                    None => {
                        let mut t = new_property_term(*property, *value, cfg.default_penalty_weight);
                        add_provenance(&mut t, &r.origin);
                        changes.push(format!("{property}: new threshold {value} with weight {}", t.weight));
                        out.terms.push(t);
                    }
                }
            }
            FeedbackItem::PenalizeSubstructure { pattern, weight } | FeedbackItem::RewardSubstructure { pattern, weight } => {
                parse_pattern(pattern)?;
                let penalty = matches!(r.rule, FeedbackItem::PenalizeSubstructure { .. });
                let same = |k: &TermKind| match k {
                    TermKind::SubstructurePenalty { pattern: p } => penalty && p == pattern,
                    TermKind::SubstructureBonus { pattern: p } => !penalty && p == pattern,
                    _ => false,
                };
                match out.terms.iter_mut().find(|t| same(&t.kind)) {
                    Some(t) => {
                        let before = t.weight;
                        t.weight = clamp(t.weight + weight);
                        add_provenance(t, &r.origin);
                        changes.push(format!("{}: weight {before} -> {}", t.name, t.weight));
                    }
                    None => {
                        let mut t = if penalty {
                            ObjectiveTerm::substructure_penalty(pattern, clamp(*weight))
                        } else {
                            ObjectiveTerm::substructure_bonus(pattern, clamp(*weight))
                        };
                        add_provenance(&mut t, &r.origin);
                        changes.push(format!("added term '{}' with weight {}", t.name, t.weight));
                        out.terms.push(t);
                    }
                }
            }
            FeedbackItem::FreeText { .. } | FeedbackItem::NoOp => unreachable!("filtered above"),
        }
    }
    out.version = spec.version + 1;
    out.validate()?;
    Ok((out, changes))
}

fn violates(rule: &FeedbackItem, mol: &Molecule, provider: &dyn PropertyProvider) -> Option<bool> {
    match rule {
        FeedbackItem::SetThreshold { property, value } => {
            let v = property.value(&properties(mol), mol, provider);
            Some(if *property == Property::Qed { v < *value } else { v > *value })
        }
        FeedbackItem::PenalizeSubstructure { pattern, .. } => parse_pattern(pattern).ok().map(|p| p.matches(mol)),
        FeedbackItem::RewardSubstructure { pattern, .. } => parse_pattern(pattern).ok().map(|p| !p.matches(mol)),
        _ => None,
    }
}

/// Deterministic reviewer. For every rule it holds (knowledge base plus
/// persona) it checks the reviewed molecules; when at least
/// `violation_share` of them break the rule, it asks for the rule to be
/// introduced or strengthened. Low batch diversity triggers a diversity
/// request. With nothing to report the record holds a single `NoOp`.
pub fn simulated_chemist(
    reviewed: &[Molecule],
    spec: &ObjectiveSpec,
    kb: &KnowledgeBase,
    cfg: &ChemistConfig,
    provider: &dyn PropertyProvider,
    round: u32,
) -> FeedbackRecord {
    let mut held: Vec<FeedbackItem> = Vec::new();
    for r in kb.rules.iter().map(|r| &r.rule).chain(cfg.persona.iter()) {
        let key = match r {
            FeedbackItem::PenalizeSubstructure { pattern, .. } => FeedbackItem::PenalizeSubstructure { pattern: pattern.clone(), weight: 0.0 },
            FeedbackItem::RewardSubstructure { pattern, .. } => FeedbackItem::RewardSubstructure { pattern: pattern.clone(), weight: 0.0 },
            other => other.clone(),
        };
        if !held.contains(&key) {
            held.push(key);
        }
    }
    let mut items = Vec::new();
    if !reviewed.is_empty() {
        for rule in &held {
            let verdicts: Vec<bool> = reviewed.iter().filter_map(|m| violates(rule, m, provider)).collect();
            if verdicts.is_empty() {
                continue;
            }
            let share = verdicts.iter().filter(|v| **v).count() as f64 / reviewed.len() as f64;
            if share < cfg.violation_share {
                continue;
            }
            let step = cfg.weight_step;
            let item = match rule {
                FeedbackItem::SetThreshold { property, value } => {
                    if spec.threshold(*property) == Some(*value) {
                        FeedbackItem::AdjustWeight { term: spec.threshold_term(*property).expect("present").name.clone(), delta: step }
                    } else {
                        FeedbackItem::SetThreshold { property: *property, value: *value }
                    }
                }
                FeedbackItem::PenalizeSubstructure { pattern, .. } => FeedbackItem::PenalizeSubstructure { pattern: pattern.clone(), weight: step },
                FeedbackItem::RewardSubstructure { pattern, .. } => FeedbackItem::RewardSubstructure { pattern: pattern.clone(), weight: step },
                _ => continue,
            };
            if !items.contains(&item) {
                items.push(item);
            }
        }
        let fps: Vec<_> = reviewed.iter().map(default_fingerprint).collect();
        if reviewed.len() > 1 && internal_diversity(&fps) < cfg.diversity_floor {
            items.push(FeedbackItem::AdjustWeight { term: "diversity".into(), delta: cfg.weight_step });
        }
    }
    if items.is_empty() {
        items.push(FeedbackItem::NoOp);
    }
    let digest = hex::encode(Sha256::digest(serde_json::to_string(&items).expect("items serialize").as_bytes()));
    FeedbackRecord { id: format!("sim-{round}-{}", &digest[..8]), round, author: Author::Simulated, items }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    /// Operator edits applied verbatim.
    HumanHuman,
    /// Human feedback through the agent pipeline.
    #[default]
    HumanAgent,
    /// Simulated reviewer through the agent pipeline.
    AgentAgent,
}

impl std::str::FromStr for LoopMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human-human" => Ok(LoopMode::HumanHuman),
            "human-agent" => Ok(LoopMode::HumanAgent),
            "agent-agent" => Ok(LoopMode::AgentAgent),
            _ => Err(CoreError::Config(format!("unknown mode '{s}' (human-human, human-agent, agent-agent)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub sufficient: bool,
    pub reasons: Vec<Reason>,
    pub clarification: Option<ClarificationExchange>,
    pub applied: Vec<DistilledRule>,
    /// Low-confidence rules waiting for operator approval.
    pub pending: Vec<DistilledRule>,
    pub spec: ObjectiveSpec,
    pub changes: Vec<String>,
}

/// Runs one feedback record through evaluation, clarification, extraction
/// and objective modification. The knowledge base records rules, the history
/// entry and one event per stage.
#[allow(clippy::too_many_arguments)]
pub fn process_feedback(
    f: &FeedbackRecord,
    spec: &ObjectiveSpec,
    kb: &mut KnowledgeBase,
    history: &[ClarificationExchange],
    reasoner: Option<&dyn Reasoner>,
    mode: LoopMode,
    cfg: &TuningConfig,
    timestamp: u64,
) -> Result<PipelineOutcome> {
    f.validate()?;
    let round = f.round;
    if mode == LoopMode::HumanHuman {
        let rules: Vec<DistilledRule> = f
            .items
            .iter()
            .filter(|i| i.is_structured())
            .map(|i| DistilledRule { origin: vec![f.id.clone()], rule: i.clone(), confidence: 1.0, round })
            .collect();
        let (new_spec, changes) = apply_to_objective(&rules, spec, cfg)?;
        record_change(kb, f, &rules, &new_spec, spec, &changes, timestamp);
        kb.log(round, "operator_edit", f, format!("applied {} edits", rules.len()));
        return Ok(PipelineOutcome {
            sufficient: true,
            reasons: Vec::new(),
            clarification: None,
            applied: rules,
            pending: Vec::new(),
            spec: new_spec,
            changes,
        });
    }
    let mut evaluation = eval_feedback(f, spec, reasoner.is_some(), cfg);
    let mut translated = Vec::new();
    if evaluation.sufficient {
        if let Some(reasoner) = reasoner {
            for (i, item) in f.items.iter().enumerate() {
                let FeedbackItem::FreeText { text } = item else { continue };
                match reasoner.translate(text, spec, kb) {
                    Ok(t) if t.items.iter().any(|x| x.is_structured()) => translated.push(t),
                    Ok(_) => evaluation.reasons.push(Reason {
                        item: Some(i),
                        kind: ReasonKind::Untranslatable,
                        message: format!("item {i}: no change recognized"),
                    }),
                    Err(e) => evaluation.reasons.push(Reason { item: Some(i), kind: ReasonKind::ReasonerFailed, message: e.to_string() }),
                }
            }
        }
        evaluation.sufficient = evaluation.reasons.is_empty();
    }
    kb.log(round, "eval", f, if evaluation.sufficient { "sufficient".into() } else { format!("{} reasons", evaluation.reasons.len()) });
    if !evaluation.sufficient {
        let exchange = make_queries(f, &evaluation.reasons, history);
        kb.log(round, "query", &evaluation.reasons, format!("{} questions", exchange.questions.len()));
        return Ok(PipelineOutcome {
            sufficient: false,
            reasons: evaluation.reasons,
            clarification: Some(exchange),
            applied: Vec::new(),
            pending: Vec::new(),
            spec: spec.clone(),
            changes: Vec::new(),
        });
    }
    let rules = extract_knowledge(f, history, &translated, kb);
    kb.log(round, "extract", f, format!("{} rules", rules.len()));
    let (applied, pending): (Vec<DistilledRule>, Vec<DistilledRule>) = rules
        .into_iter()
        .partition(|r| mode == LoopMode::AgentAgent || r.confidence >= cfg.approval_threshold);
    let (new_spec, changes) = apply_to_objective(&applied, spec, cfg)?;
    record_change(kb, f, &applied, &new_spec, spec, &changes, timestamp);
    kb.log(round, "code", &applied, format!("version {} -> {}", spec.version, new_spec.version));
    Ok(PipelineOutcome {
        sufficient: true,
        reasons: Vec::new(),
        clarification: None,
        applied,
        pending,
        spec: new_spec,
        changes,
    })
}

/// Applies operator-approved pending rules.
pub fn approve_rules(
    rules: &[DistilledRule],
    source: &str,
    round: u32,
    spec: &ObjectiveSpec,
    kb: &mut KnowledgeBase,
    cfg: &TuningConfig,
    timestamp: u64,
) -> Result<ObjectiveSpec> {
    let (new_spec, changes) = apply_to_objective(rules, spec, cfg)?;
    if new_spec.version != spec.version {
        kb.history.push(HistoryEntry {
            version: new_spec.version,
            source: source.into(),
            round,
            rules: rules.iter().map(|r| r.rule.clone()).collect(),
            changes,
            timestamp,
        });
    }
    Ok(new_spec)
}

fn record_change(
    kb: &mut KnowledgeBase,
    f: &FeedbackRecord,
    rules: &[DistilledRule],
    new_spec: &ObjectiveSpec,
    old: &ObjectiveSpec,
    changes: &[String],
    timestamp: u64,
) {
    if new_spec.version != old.version {
        kb.history.push(HistoryEntry {
            version: new_spec.version,
            source: f.id.clone(),
            round: f.round,
            rules: rules.iter().map(|r| r.rule.clone()).collect(),
            changes: changes.to_vec(),
            timestamp,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(items: Vec<FeedbackItem>) -> FeedbackRecord {
        FeedbackRecord { id: "f1".into(), round: 1, author: Author::Human, items }
    }

    #[test]
    fn item_json_shape() {
        let item = FeedbackItem::AdjustWeight { term: "diversity".into(), delta: 0.2 };
        let json = serde_json::to_string(&item).unwrap();
        assert_eq!(json, r#"{"type":"adjust_weight","term":"diversity","delta":0.2}"#);
        let lambda: FeedbackItem = serde_json::from_str(r#"{"type":"penalize_substructure","pattern":"N","lambda":0.3}"#).unwrap();
        assert_eq!(lambda, FeedbackItem::PenalizeSubstructure { pattern: "N".into(), weight: 0.3 });
    }

    #[test]
    fn validation_rejects_empty_and_nan() {
        assert!(record(vec![]).validate().is_err());
        assert!(record(vec![FeedbackItem::AdjustWeight { term: "x".into(), delta: f64::NAN }]).validate().is_err());
    }

    #[test]
    fn keyword_table() {
        let kb = KnowledgeBase::new(ObjectiveSpec::empty());
        let t = KeywordReasoner.translate("These molecules are too heavy", &ObjectiveSpec::empty(), &kb).unwrap();
        assert_eq!(t.items, vec![FeedbackItem::SetThreshold { property: Property::Mw, value: 450.0 }]);
        assert!(KeywordReasoner.translate("looks fine", &ObjectiveSpec::empty(), &kb).unwrap().items.is_empty());
    }

    #[test]
    fn loop_mode_names() {
        assert_eq!("agent-agent".parse::<LoopMode>().unwrap(), LoopMode::AgentAgent);
        assert!("robot".parse::<LoopMode>().is_err());
    }
}
