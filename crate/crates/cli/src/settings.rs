//! Run configuration from a TOML or JSON file plus `--set key=value` overrides.

use std::path::Path;

use anyhow::{Context, Result};
use fraglearn_core::RunConfig;

use crate::UsageError;

/// Loads `path` (by extension: `.json` is JSON, anything else TOML) or the
/// defaults, then applies overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let base = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    apply_overrides(base, overrides)
}

pub fn apply_overrides(cfg: RunConfig, overrides: &[String]) -> Result<RunConfig> {
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut root = toml::Value::try_from(&cfg).context("config to TOML")?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--set expects key=value, got '{item}'")))?;
        let value = parse_value(raw.trim());
        let mut parts: Vec<&str> = key.trim().split('.').collect();
        let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| UsageError(format!("--set: empty key in '{item}'")))?;
        let mut table = root.as_table_mut().expect("config is a table");
        for part in parts {
            table = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| UsageError(format!("--set: '{part}' in '{key}' is not a section")))?;
        }
        table.insert(last.to_string(), value);
    }
    let cfg: RunConfig = root.try_into().map_err(|e| UsageError(format!("--set: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// A TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_overrides() {
        let cfg = apply_overrides(
            RunConfig::default(),
            &["seed=7".into(), "qlearn.alpha=0.25".into(), "objective.preset=drug_like".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.qlearn.alpha, 0.25);
        assert_eq!(cfg.objective.preset, "drug_like");
    }

    #[test]
    fn bad_override_is_a_usage_error() {
        let err = apply_overrides(RunConfig::default(), &["seed".into()]).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        let err = apply_overrides(RunConfig::default(), &["qlearn.nope=1".into()]).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
