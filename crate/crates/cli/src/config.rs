//! Run configuration: command-line flags over a `key = value` file over
//! built-in defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "QSPACE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qspace-out";
pub const DEFAULT_SEED: u64 = 1;

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Plain-text `key = value` config file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (also settable through QSPACE_OUT_DIR).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// What to print on stdout: `csv` (main table) or `json` (summary).
    #[arg(long)]
    pub format: Option<String>,
    /// Seed for randomized property checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `parallel` or `sequential`.
    #[arg(long)]
    pub exec: Option<String>,
}

#[derive(Debug)]
pub struct Resolver {
    file: BTreeMap<String, (String, usize)>,
    used: BTreeSet<String>,
    resolved: Vec<(String, String)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`", no + 1))?;
        let key = normalize(k);
        if key.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        if out.insert(key.clone(), (v.trim().to_string(), no + 1)).is_some() {
            bail!("config line {}: duplicate key `{key}`", no + 1);
        }
    }
    Ok(out)
}

impl Resolver {
    pub fn empty() -> Self {
        Self {
            file: BTreeMap::new(),
            used: BTreeSet::new(),
            resolved: Vec::new(),
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut r = Self::empty();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            r.file = parse_config(&text).with_context(|| format!("in {}", p.display()))?;
        }
        Ok(r)
    }

    fn file_value<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.file.get(key) {
            None => Ok(None),
            Some((v, line)) => {
                self.used.insert(key.to_string());
                v.parse::<T>()
                    .map(Some)
                    .map_err(|e| anyhow!("config line {line}: invalid value for `{key}`: {e}"))
            }
        }
    }

    /// Resolves `key` and records the value in the run configuration.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.used.insert(key.to_string());
                v
            }
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.resolved.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Like [`get`](Self::get) without a default; records only when set.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.resolved.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    /// Resolves a value that is not part of the recorded configuration.
    pub fn get_unrecorded<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file_value(key),
        }
    }

    /// Fails on config keys that no option consumed.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        let unknown: Vec<String> = self
            .file
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, (_, line))| format!("`{k}` (line {line})"))
            .collect();
        if !unknown.is_empty() {
            bail!("unknown config keys: {}", unknown.join(", "));
        }
        Ok(self.resolved)
    }
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|e| anyhow!("invalid number `{t}`: {e}"))
        })
        .collect()
}

/// Exactly three comma-separated reals.
pub fn parse_vec3(key: &str, s: &str) -> Result<[f64; 3]> {
    let v = parse_list(s).with_context(|| format!("`{key}`"))?;
    v.as_slice()
        .try_into()
        .map_err(|_| anyhow!("`{key}` needs three components, got {}", v.len()))
}

pub fn require_finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        bail!("`{key}` must be finite, got {v}")
    }
}

pub fn require_positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        bail!("`{key}` must be positive and finite, got {v}")
    }
}
