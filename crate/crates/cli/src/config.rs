//! Flat `key = value` configuration files merged under command-line flags.
//!
//! Lines are `key = value`; `#` starts a comment; keys are the long flag names
//! without the leading dashes. Flags override the file, the file overrides
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Keys accepted in configuration files.
pub const KNOWN_KEYS: &[&str] = &[
    "d",
    "reg",
    "target",
    "targets",
    "solver",
    "solvers",
    "level",
    "levels",
    "tol",
    "max-iter",
    "inner-tol",
    "theta",
    "alpha",
    "beta",
    "nested-tolerance",
    "inner",
    "amg-strength",
    "amg-pre-smooth",
    "amg-post-smooth",
    "amg-max-coarse",
    "bp-delta-l2",
    "bp-delta-energy",
    "bp-cycles",
    "gmres-cycles",
    "lumping-constant",
    "rho",
    "rho-local",
    "n-per-axis",
    "lanczos-iterations",
    "out",
    "jobs",
    "vtk",
    "snapshot",
    "lumped",
    "adaptive",
    "spectral",
    "inexact",
    "dense",
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected 'key = value'", no + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                bail!("line {}: unknown key '{k}'", no + 1);
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key '{k}'", no + 1);
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Flag value, else file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "undeclared key {key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            Some(v) => v.parse().map(Some).map_err(|e| anyhow!("config key '{key}': {e}")),
            None => Ok(None),
        }
    }

    /// Boolean switch: set by the flag or by `key = true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        self.pick_opt::<bool>(None, key).map(|v| v.unwrap_or(false))
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| anyhow!("'{t}': {e}")))
        .collect()
}
