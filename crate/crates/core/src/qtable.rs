//! Connection scores between fragment attachment sites.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fragment::{Decomposition, Fragment};

pub const FORMAT_VERSION: u32 = 1;

/// Pairing of two fragment sites, stored with the smaller `(key, site)` first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnectionKey {
    pub a: String,
    pub site_a: usize,
    pub b: String,
    pub site_b: usize,
}

impl ConnectionKey {
    pub fn new(a: impl Into<String>, site_a: usize, b: impl Into<String>, site_b: usize) -> Self {
        let (a, b) = (a.into(), b.into());
        if (a.as_str(), site_a) <= (b.as_str(), site_b) {
            ConnectionKey { a, site_a, b, site_b }
        } else {
            ConnectionKey { a: b, site_a: site_b, b: a, site_b: site_a }
        }
    }

    /// The same pairing written from the other side, normalized again.
    pub fn swapped(&self) -> Self {
        ConnectionKey::new(self.b.clone(), self.site_b, self.a.clone(), self.site_a)
    }

    pub fn is_normalized(&self) -> bool {
        (self.a.as_str(), self.site_a) <= (self.b.as_str(), self.site_b)
    }

    pub fn involves(&self, fragment: &str) -> bool {
        self.a == fragment || self.b == fragment
    }

    /// Whether this pairing uses site `site` of `fragment`.
    pub fn uses_site(&self, fragment: &str, site: usize) -> bool {
        (self.a == fragment && self.site_a == site) || (self.b == fragment && self.site_b == site)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QEntry {
    pub q: f64,
    pub visits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// `q += alpha * (r - q)`
    #[default]
    Ema,
    /// `q += r`
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub mode: UpdateMode,
    pub r_recon: f64,
}

impl Default for QParams {
    fn default() -> Self {
        QParams { epsilon: 0.1, alpha: 0.1, mode: UpdateMode::Ema, r_recon: 1.0 }
    }
}

impl QParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(CoreError::Config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(CoreError::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !self.r_recon.is_finite() {
            return Err(CoreError::Config("r_recon must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "TableFile", try_from = "TableFile")]
pub struct QTable {
    params: QParams,
    entries: BTreeMap<ConnectionKey, QEntry>,
    fragments: BTreeSet<String>,
    by_fragment: BTreeMap<String, BTreeSet<ConnectionKey>>,
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    a: String,
    site_a: usize,
    b: String,
    site_b: usize,
    q: f64,
    visits: u64,
}

#[derive(Serialize, Deserialize)]
#[doc(hidden)]
pub struct TableFile {
    version: u32,
    epsilon: f64,
    alpha: f64,
    #[serde(default)]
    mode: UpdateMode,
    #[serde(default = "default_r_recon")]
    r_recon: f64,
    entries: Vec<EntryRecord>,
    #[serde(default)]
    fragments: Vec<String>,
}

fn default_r_recon() -> f64 {
    QParams::default().r_recon
}

impl QTable {
    pub fn new(params: QParams) -> Self {
        QTable { params, ..QTable::default() }
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ConnectionKey, &QEntry)> {
        self.entries.iter()
    }

    pub fn get(&self, key: &ConnectionKey) -> Option<&QEntry> {
        if key.is_normalized() {
            self.entries.get(key)
        } else {
            self.entries.get(&key.swapped())
        }
    }

    /// Score used for sampling; unseen pairings read as epsilon.
    pub fn q_or_prior(&self, key: &ConnectionKey) -> f64 {
        self.get(key).map_or(self.params.epsilon, |e| e.q)
    }

    pub fn known_fragments(&self) -> &BTreeSet<String> {
        &self.fragments
    }

    pub fn is_known(&self, fragment: &str) -> bool {
        self.fragments.contains(fragment)
    }

    /// Registers fragments without materializing any entry. Returns how many were new.
    pub fn insert_fragments<'a>(&mut self, vocab: impl IntoIterator<Item = &'a Fragment>) -> usize {
        vocab.into_iter().filter(|f| self.fragments.insert(f.key().to_string())).count()
    }

    /// Entries touching `fragment`.
    pub fn entries_for(&self, fragment: &str) -> impl Iterator<Item = (&ConnectionKey, &QEntry)> {
        self.by_fragment
            .get(fragment)
            .into_iter()
            .flatten()
            .map(|k| (k, &self.entries[k]))
    }

    fn entry_mut(&mut self, key: &ConnectionKey) -> &mut QEntry {
        let key = if key.is_normalized() { key.clone() } else { key.swapped() };
        if !self.entries.contains_key(&key) {
            for f in [&key.a, &key.b] {
                self.fragments.insert(f.clone());
                self.by_fragment.entry(f.clone()).or_default().insert(key.clone());
            }
        }
        let epsilon = self.params.epsilon;
        self.entries.entry(key).or_insert(QEntry { q: epsilon, visits: 0 })
    }

    /// Applies one reward, materializing the entry at epsilon if needed.
    /// Rewards are clamped to `[0, 1]`. Returns the new score.
    pub fn update(&mut self, key: &ConnectionKey, reward: f64) -> f64 {
        assert!(reward.is_finite(), "reward must be finite");
        let r = reward.clamp(0.0, 1.0);
        let QParams { alpha, mode, .. } = self.params;
        let entry = self.entry_mut(key);
        match mode {
            UpdateMode::Ema => entry.q += alpha * (r - entry.q),
            UpdateMode::Sum => entry.q += r,
        }
        entry.visits += 1;
        entry.q
    }

    /// Rewards every connection of a decomposition once.
    pub fn reward_reconstruction(&mut self, d: &Decomposition, reward: f64) {
        for key in decomposition_keys(d) {
            self.update(&key, reward);
        }
    }

    /// Each molecule's connections receive `individual + group[i]`, one update per occurrence.
    pub fn distribute_rewards(&mut self, batch: &[(&[ConnectionKey], f64)], group: &[f64]) -> Result<()> {
        if batch.len() != group.len() {
            return Err(CoreError::Config(format!(
                "{} molecules but {} group rewards",
                batch.len(),
                group.len()
            )));
        }
        for ((keys, individual), g) in batch.iter().zip(group) {
            for key in keys.iter() {
                self.update(key, individual + g);
            }
        }
        Ok(())
    }

    /// Removes entries with at least `min_visits` visits and `q < q_min`.
    pub fn prune(&mut self, min_visits: u64, q_min: f64) -> usize {
        let doomed: Vec<ConnectionKey> = self
            .entries
            .iter()
            .filter(|(_, e)| e.visits >= min_visits && e.q < q_min)
            .map(|(k, _)| k.clone())
            .collect();
        for key in &doomed {
            self.entries.remove(key);
            for f in [&key.a, &key.b] {
                if let Some(set) = self.by_fragment.get_mut(f) {
                    set.remove(key);
                    if set.is_empty() {
                        self.by_fragment.remove(f);
                    }
                }
            }
        }
        doomed.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CoreError::io(path, e))
    }

    pub fn restore(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        check_version(&text).map_err(|e| e.unwrap_or_else(|m| CoreError::format(path, m)))?;
        serde_json::from_str(&text).map_err(|e| CoreError::format(path, e))
    }
}

impl From<QTable> for TableFile {
    fn from(t: QTable) -> Self {
        TableFile {
            version: FORMAT_VERSION,
            epsilon: t.params.epsilon,
            alpha: t.params.alpha,
            mode: t.params.mode,
            r_recon: t.params.r_recon,
            entries: t
                .entries
                .into_iter()
                .map(|(k, e)| EntryRecord { a: k.a, site_a: k.site_a, b: k.b, site_b: k.site_b, q: e.q, visits: e.visits })
                .collect(),
            fragments: t.fragments.into_iter().collect(),
        }
    }
}

impl TryFrom<TableFile> for QTable {
    type Error = String;

    fn try_from(file: TableFile) -> std::result::Result<Self, String> {
        if file.version != FORMAT_VERSION {
            return Err(format!("unsupported table version {}", file.version));
        }
        let params = QParams { epsilon: file.epsilon, alpha: file.alpha, mode: file.mode, r_recon: file.r_recon };
        let mut table = QTable::new(params);
        for r in file.entries {
            let key = ConnectionKey::new(r.a, r.site_a, r.b, r.site_b);
            *table.entry_mut(&key) = QEntry { q: r.q, visits: r.visits };
        }
        table.fragments.extend(file.fragments);
        Ok(table)
    }
}

fn check_version(text: &str) -> std::result::Result<(), std::result::Result<CoreError, String>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Err(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => Ok(()),
        Some(v) => Err(Ok(CoreError::FormatVersionMismatch { expected: FORMAT_VERSION, found: v as u32 })),
        None => Err(Err("missing version field".into())),
    }
}

/// Normalized keys of a decomposition's connections, in record order.
pub fn decomposition_keys(d: &Decomposition) -> Vec<ConnectionKey> {
    d.connections
        .iter()
        .map(|c| {
            ConnectionKey::new(
                d.fragments[c.fragment_a].key(),
                c.site_a,
                d.fragments[c.fragment_b].key(),
                c.site_b,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> QTable {
        QTable::new(QParams { epsilon: 0.1, alpha: 0.5, ..QParams::default() })
    }

    #[test]
    fn ema_sequence() {
        let mut t = half();
        let k = ConnectionKey::new("[*:1]C", 0, "[*:1]CO", 0);
        assert_eq!(t.update(&k, 1.0), 0.55);
        assert_eq!(t.update(&k, 1.0), 0.775);
        assert_eq!(t.get(&k).unwrap().visits, 2);
    }

    #[test]
    fn decay_and_fixed_point() {
        let mut t = half();
        let k = ConnectionKey::new("x", 0, "y", 0);
        t.update(&k, 1.0);
        assert_eq!(t.update(&k, 0.0), 0.275);
        assert_eq!(t.update(&k, 0.275), 0.275);
    }

    #[test]
    fn normalized_orientation() {
        let k = ConnectionKey::new("b", 1, "a", 0);
        assert_eq!((k.a.as_str(), k.site_a), ("a", 0));
        assert_eq!(k.swapped(), k);
        let self_pair = ConnectionKey::new("a", 2, "a", 1);
        assert_eq!((self_pair.site_a, self_pair.site_b), (1, 2));
    }

    #[test]
    fn distribute_checks_lengths() {
        let mut t = half();
        assert!(t.distribute_rewards(&[], &[0.5]).is_err());
        t.distribute_rewards(&[], &[]).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn sum_mode_accumulates() {
        let mut t = QTable::new(QParams { mode: UpdateMode::Sum, ..QParams::default() });
        let k = ConnectionKey::new("x", 0, "y", 0);
        t.update(&k, 1.0);
        t.update(&k, 0.5);
        assert!((t.get(&k).unwrap().q - 1.6).abs() < 1e-12);
    }

    #[test]
    fn prune_drops_poor_entries() {
        let mut t = half();
        let good = ConnectionKey::new("x", 0, "y", 0);
        let poor = ConnectionKey::new("x", 0, "z", 0);
        t.update(&good, 1.0);
        t.update(&poor, 0.0);
        assert_eq!(t.prune(1, 0.1), 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.entries_for("z").count(), 0);
        assert_eq!(t.entries_for("x").count(), 1);
    }
}
