use std::collections::BTreeMap;
use std::path::Path;

use adiasim::builder::{pad_chains, ChainSet};
use adiasim::toy::standard_inputs;
use adiasim::turing::{parse_tm, print_tm, TMConfiguration, TMSpec};
use anyhow::{Context, Result};

use crate::out::read;

pub fn load_tm(path: &Path) -> Result<TMSpec> {
    let text = read(path)?;
    parse_tm(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn inputs(spec: &TMSpec, r: u32) -> Vec<TMConfiguration> {
    standard_inputs(spec, r, 0)
}

/// Chains from the standard inputs, each run for at most `t` steps and padded to `t` nodes.
pub fn chain_set(spec: &TMSpec, r: u32, t: usize) -> Result<ChainSet> {
    let cs = ChainSet::from_tm(spec, r, &inputs(spec, r), t)
        .context("running the machine on every seed")?;
    pad_chains(&cs, t).context("padding chains")
}

/// The distribution the sampler should reproduce: each chain's final output, weight 2^-r.
pub fn target(cs: &ChainSet) -> BTreeMap<Vec<u8>, f64> {
    let w = 1.0 / cs.chains().len() as f64;
    let mut d = BTreeMap::new();
    for c in cs.chains() {
        *d.entry(c.last().expect("chains are non-empty").output.clone())
            .or_insert(0.0) += w;
    }
    d
}

/// One line of the canonical text form per rule.
pub fn rule_lines(spec: &TMSpec) -> Vec<String> {
    let text = print_tm(spec);
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len() - spec.rules().len()..]
        .iter()
        .map(|s| s.to_string())
        .collect()
}
