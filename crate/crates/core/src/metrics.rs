//! Batch evaluation: validity, uniqueness, novelty, diversity, distance to the
//! training set, drug-likeness, scaffolds, class membership and discovery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fraglearn_chem::{lipinski_pass, morgan_fingerprint, murcko_scaffold, parse_smiles, properties, tanimoto, write_canonical, Fingerprint, Molecule};

use crate::error::{CoreError, Result};
use crate::membership::MembershipClass;
use crate::proxies::PropertyProvider;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub radius: usize,
    pub width: usize,
    /// Synthesizable when the SA proxy is at most this value.
    pub sa_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            radius: fraglearn_chem::fingerprint::DEFAULT_RADIUS,
            width: fraglearn_chem::fingerprint::DEFAULT_WIDTH,
            sa_threshold: 6.0,
        }
    }
}

/// Percentages are in `[0, 100]`; distances in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub count: usize,
    pub validity: f64,
    pub uniqueness: f64,
    pub novelty: f64,
    pub diversity: f64,
    pub chamfer: f64,
    pub lipinski: f64,
    pub scaffold_diversity: f64,
    pub scaffold_count: usize,
    pub membership: Option<f64>,
    pub discovery_rate: f64,
    pub discovery_rate_with_membership: Option<f64>,
    pub mean_qed: f64,
    pub mean_sa: f64,
    pub mean_mw: f64,
    pub mean_logp: f64,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean of `1 - tanimoto` over unordered pairs; 0 for fewer than two items.
pub fn internal_diversity(fps: &[Fingerprint]) -> f64 {
    let n = fps.len();
    if n < 2 {
        return 0.0;
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| 1.0 - tanimoto(&fps[i], &fps[j]).expect("same width")).sum())
        .collect();
    let pairs = n * (n - 1) / 2;
    rows.iter().sum::<f64>() / pairs as f64
}

/// Mean over `generated` of the distance to the nearest `reference` item.
pub fn chamfer_distance(generated: &[Fingerprint], reference: &[Fingerprint]) -> f64 {
    if generated.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let nearest: Vec<f64> = generated
        .par_iter()
        .map(|g| reference.iter().map(|r| 1.0 - tanimoto(g, r).expect("same width")).fold(f64::INFINITY, f64::min))
        .collect();
    nearest.iter().sum::<f64>() / nearest.len() as f64
}

/// Evaluates generated SMILES strings against a training set.
pub fn evaluate(
    generated: &[String],
    training: &[Molecule],
    cfg: &MetricsConfig,
    membership: Option<&MembershipClass>,
    provider: &dyn PropertyProvider,
) -> Result<EvaluationReport> {
    if generated.is_empty() {
        return Err(CoreError::EmptyBatch);
    }
    if training.is_empty() {
        return Err(CoreError::Config("training set is empty".into()));
    }
    let n = generated.len();
    let parsed: Vec<Option<Molecule>> = generated.par_iter().map(|s| parse_smiles(s).ok()).collect();
    let valid: Vec<&Molecule> = parsed.iter().flatten().collect();
    let canon: Vec<String> = valid.par_iter().map(|m| write_canonical(m).into_string()).collect();
    let train_canon: BTreeSet<String> = training.iter().map(|m| write_canonical(m).into_string()).collect();

    // First occurrence of each canonical string.
    let mut first: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, c) in canon.iter().enumerate() {
        first.entry(c.as_str()).or_insert(i);
    }
    let novel: Vec<usize> = first.iter().filter(|(c, _)| !train_canon.contains(**c)).map(|(_, &i)| i).collect();

    let fp = |m: &Molecule| morgan_fingerprint(m, cfg.radius, cfg.width);
    let gen_fps: Vec<Fingerprint> = valid.par_iter().map(|m| fp(m)).collect();
    let train_fps: Vec<Fingerprint> = training.par_iter().map(fp).collect();

    struct Row {
        lipinski: bool,
        scaffold: Option<String>,
        member: bool,
        qed: f64,
        sa: f64,
        mw: f64,
        logp: f64,
    }
    let rows: Vec<Row> = valid
        .par_iter()
        .map(|m| {
            let p = properties(m);
            Row {
                lipinski: lipinski_pass(&p),
                scaffold: murcko_scaffold(m).map(|s| s.into_string()),
                member: membership.is_some_and(|c| c.contains(m)),
                qed: provider.qed(m),
                sa: provider.sa(m),
                mw: p.mol_weight,
                logp: p.logp,
            }
        })
        .collect();

    let scaffolds: BTreeSet<&str> = rows.iter().filter_map(|r| r.scaffold.as_deref()).collect();
    let discovered: Vec<usize> = novel.iter().copied().filter(|&i| rows[i].sa <= cfg.sa_threshold).collect();
    let discovered_members = discovered.iter().filter(|&&i| rows[i].member).count();

    Ok(EvaluationReport {
        count: n,
        validity: pct(valid.len(), n),
        uniqueness: pct(first.len(), n),
        novelty: pct(novel.len(), first.len()),
        diversity: internal_diversity(&gen_fps),
        chamfer: chamfer_distance(&gen_fps, &train_fps),
        lipinski: pct(rows.iter().filter(|r| r.lipinski).count(), n),
        scaffold_diversity: scaffolds.len() as f64 / n as f64,
        scaffold_count: scaffolds.len(),
        membership: membership.map(|_| pct(rows.iter().filter(|r| r.member).count(), n)),
        discovery_rate: pct(discovered.len(), n),
        discovery_rate_with_membership: membership.map(|_| pct(discovered_members, n)),
        mean_qed: mean(rows.iter().map(|r| r.qed)),
        mean_sa: mean(rows.iter().map(|r| r.sa)),
        mean_mw: mean(rows.iter().map(|r| r.mw)),
        mean_logp: mean(rows.iter().map(|r| r.logp)),
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-row text table.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1}"));
        let cells: Vec<(&str, String)> = vec![
            ("Dis w/", opt(self.discovery_rate_with_membership)),
            ("Dis w/o", format!("{:.1}", self.discovery_rate)),
            ("Valid (%)", format!("{:.1}", self.validity)),
            ("Unique (%)", format!("{:.1}", self.uniqueness)),
            ("Novel (%)", format!("{:.1}", self.novelty)),
            ("Cham.", format!("{:.3}", self.chamfer)),
            ("Div.", format!("{:.3}", self.diversity)),
            ("Mem. (%)", opt(self.membership)),
            ("QED", format!("{:.3}", self.mean_qed)),
            ("SA", format!("{:.3}", self.mean_sa)),
            ("Lipinski (%)", format!("{:.1}", self.lipinski)),
            ("Scaffold Div.", format!("{:.3}", self.scaffold_diversity)),
            ("MW", format!("{:.1}", self.mean_mw)),
            ("logP", format!("{:.2}", self.mean_logp)),
        ];
        let mut head = String::new();
        let mut body = String::new();
        for (name, value) in &cells {
            let w = name.len().max(value.len());
            let _ = write!(head, "{name:>w$}  ");
            let _ = write!(body, "{value:>w$}  ");
        }
        format!("{}\n{}\n", head.trim_end(), body.trim_end())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxies::ProxyProvider;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn uniqueness_uses_canonical_form() {
        let train = vec![parse_smiles("c1ccccc1").unwrap()];
        let r = evaluate(&strings(&["CCO", "OCC"]), &train, &MetricsConfig::default(), None, &ProxyProvider::new()).unwrap();
        assert_eq!(r.uniqueness, 50.0);
        assert_eq!(r.novelty, 100.0);
        assert_eq!(r.diversity, 0.0);
    }

    #[test]
    fn invalid_entries_lower_validity() {
        let train = vec![parse_smiles("CCO").unwrap()];
        let r = evaluate(&strings(&["CCO", "C1CC", "CC"]), &train, &MetricsConfig::default(), None, &ProxyProvider::new()).unwrap();
        assert!((r.validity - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.novelty, 50.0);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let train = vec![parse_smiles("CCO").unwrap()];
        assert!(matches!(
            evaluate(&[], &train, &MetricsConfig::default(), None, &ProxyProvider::new()),
            Err(CoreError::EmptyBatch)
        ));
    }

    #[test]
    fn table_has_header_and_values() {
        let train = vec![parse_smiles("CCO").unwrap()];
        let r = evaluate(&strings(&["CCN"]), &train, &MetricsConfig::default(), None, &ProxyProvider::new()).unwrap();
        let t = r.to_table();
        assert_eq!(t.lines().count(), 2);
        assert!(t.starts_with("Dis w/"));
    }
}
