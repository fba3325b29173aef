//! Settings shared by all commands: defaults, then the `--config` file, then
//! the seed environment variable, then command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mmphf_core::coloring_lab::FamilyLimits;
use mmphf_core::process_lab::LabLimits;
use mmphf_core::{BuildConfig, Regime};
use serde::Serialize;

use crate::UsageError;

pub const SEED_ENV: &str = "MMPH_SEED";
pub const DEFAULT_SEED: u64 = 0x6D6D_7068_6673_6565;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub plain_cutoff: u64,
    pub regime: Option<Regime>,
    pub inner_bucket_size: Option<u64>,
    pub max_outcomes: u64,
    pub max_blocks: u64,
    pub max_columns: u64,
    pub max_sequences: u64,
    pub max_nodes: u64,
    #[serde(skip)]
    pub format: Option<Format>,
    pub seed: u64,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        let lab = LabLimits::default();
        let family = FamilyLimits::default();
        Self {
            plain_cutoff: BuildConfig::default().plain_cutoff,
            regime: None,
            inner_bucket_size: None,
            max_outcomes: lab.max_outcomes,
            max_blocks: lab.max_blocks,
            max_columns: family.max_columns,
            max_sequences: family.max_sequences,
            max_nodes: family.max_nodes,
            format: None,
            seed: DEFAULT_SEED,
            workers: None,
        }
    }
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    let v = value.replace('_', "");
    let parsed = if let Some(hex) = v.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
    } else {
        v.parse()
    };
    parsed.map_err(|_| UsageError(format!("{key}: '{value}' is not an unsigned integer")).into())
}

impl Config {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), no + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "plain_cutoff" => self.plain_cutoff = parse_u64(key, value)?,
            "regime" => {
                self.regime = match value {
                    "auto" | "" => None,
                    r => Some(r.parse().map_err(|e: mmphf_core::Error| UsageError(e.to_string()))?),
                }
            }
            "inner_bucket_size" => self.inner_bucket_size = Some(parse_u64(key, value)?),
            "max_outcomes" => self.max_outcomes = parse_u64(key, value)?,
            "max_blocks" => self.max_blocks = parse_u64(key, value)?,
            "max_columns" => self.max_columns = parse_u64(key, value)?,
            "max_sequences" => self.max_sequences = parse_u64(key, value)?,
            "max_nodes" => self.max_nodes = parse_u64(key, value)?,
            "format" => {
                self.format = Some(match value {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    _ => bail!(UsageError(format!("format: '{value}' is neither json nor csv"))),
                })
            }
            "seed" => self.seed = parse_u64(key, value)?,
            "workers" => self.workers = Some(parse_u64(key, value)? as usize),
            _ => bail!(UsageError(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let budgets = [
            ("max_outcomes", self.max_outcomes),
            ("max_blocks", self.max_blocks),
            ("max_columns", self.max_columns),
            ("max_sequences", self.max_sequences),
            ("max_nodes", self.max_nodes),
            ("plain_cutoff", self.plain_cutoff),
        ];
        for (name, v) in budgets {
            if v == 0 {
                bail!(UsageError(format!("{name} must be positive")));
            }
        }
        if self.inner_bucket_size == Some(0) {
            bail!(UsageError("inner_bucket_size must be positive".into()));
        }
        if self.workers == Some(0) {
            bail!(UsageError("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            plain_cutoff: self.plain_cutoff,
            regime: self.regime,
            inner_bucket_size: self.inner_bucket_size,
            seed: self.seed,
        }
    }

    pub fn lab_limits(&self) -> LabLimits {
        LabLimits {
            max_outcomes: self.max_outcomes,
            max_blocks: self.max_blocks,
        }
    }

    pub fn family_limits(&self) -> FamilyLimits {
        FamilyLimits {
            max_sequences: self.max_sequences,
            max_columns: self.max_columns,
            max_nodes: self.max_nodes,
            ..FamilyLimits::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "# lab settings\nseed = 0x10\nregime = bucketed\nmax_outcomes = 1_000 # small\n\n").unwrap();
        let mut c = Config::default();
        c.apply_file(&path).unwrap();
        assert_eq!(c.seed, 16);
        assert_eq!(c.regime, Some(Regime::Bucketed));
        assert_eq!(c.max_outcomes, 1000);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_entries() {
        let mut c = Config::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("seed", "x").is_err());
        c.set("max_blocks", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
