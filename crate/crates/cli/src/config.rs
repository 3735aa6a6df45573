//! Flat `key = value` experiment files. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Lv,
    Mc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub tm_path: PathBuf,
    pub r: u32,
    pub t: usize,
    /// LV only: time between measurements; calibrated when absent.
    pub wait: Option<f64>,
    /// MC only: multiple of the calibrated wait.
    pub c: f64,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    /// Relative to the output root.
    pub output_dir: PathBuf,
}

const KEYS: [&str; 10] = [
    "mode",
    "tm",
    "r",
    "T",
    "wait",
    "c",
    "trials",
    "samples",
    "seed",
    "output_dir",
];

pub fn parse_pairs(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("{}:{}: unknown key `{k}`", path.display(), i + 1);
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            bail!("{}:{}: duplicate key `{k}`", path.display(), i + 1);
        }
    }
    Ok(out)
}

/// Applies `key=value` overrides on top of the file's pairs.
pub fn apply_overrides(pairs: &mut BTreeMap<String, String>, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got `{s}`"))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("--set: unknown key `{k}`");
        }
        pairs.insert(k.to_string(), v.trim().to_string());
    }
    Ok(())
}

fn field<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    pairs
        .get(key)
        .map(|v| {
            v.parse()
                .with_context(|| format!("bad value `{v}` for `{key}`"))
        })
        .transpose()
}

fn required<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    field(pairs, key)?.ok_or_else(|| anyhow!("missing required key `{key}`"))
}

impl ExperimentConfig {
    /// `base` resolves a relative `tm` path, normally the config file's directory.
    pub fn from_pairs(pairs: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let mode = match pairs.get("mode").map(String::as_str) {
            Some("lv") => Mode::Lv,
            Some("mc") => Mode::Mc,
            Some(m) => bail!("mode must be lv or mc, got `{m}`"),
            None => bail!("missing required key `mode`"),
        };
        let wait: Option<f64> = field(pairs, "wait")?;
        let c: Option<f64> = field(pairs, "c")?;
        match mode {
            Mode::Lv if c.is_some() => bail!("`c` applies to mc runs; use `wait` for lv"),
            Mode::Mc if wait.is_some() => bail!("`wait` applies to lv runs; use `c` for mc"),
            _ => {}
        }
        let c = c.unwrap_or(1.0);
        if !(c > 0.0 && c.is_finite()) {
            bail!("c must be positive");
        }
        if wait.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
            bail!("wait must be positive");
        }
        let tm: String = required(pairs, "tm")?;
        Ok(Self {
            mode,
            tm_path: base.join(tm),
            r: required(pairs, "r")?,
            t: required(pairs, "T")?,
            wait,
            c,
            trials: field(pairs, "trials")?.unwrap_or(2000),
            samples: field(pairs, "samples")?.unwrap_or(2000),
            seed: required(pairs, "seed")?,
            output_dir: PathBuf::from(pairs.get("output_dir").map(String::as_str).unwrap_or(".")),
        })
    }
}
