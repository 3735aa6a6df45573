//! Records CSV: `index,sim_time,metadata,value,accepted`.
//!
//! Values made only of tape-like characters are written as text; anything else
//! as `0x` followed by hex. Rejected records have an empty value.

use std::fmt::Write;
use std::path::Path;

use adiasim::observer::SampleRecord;
use anyhow::{bail, Context, Result};

pub const HEADER: &str = "index,sim_time,metadata,value,accepted";

fn plain(bytes: &[u8]) -> bool {
    !bytes.is_empty()
        && !bytes.starts_with(b"0x")
        && bytes
            .iter()
            .all(|b| b.is_ascii_alphanumeric() || *b == b'_')
}

pub fn encode_value(bytes: &[u8]) -> String {
    if bytes.is_empty() || plain(bytes) {
        return String::from_utf8_lossy(bytes).into_owned();
    }
    let mut s = String::from("0x");
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

pub fn decode_value(s: &str) -> Option<Vec<u8>> {
    let Some(hex) = s.strip_prefix("0x") else {
        return Some(s.as_bytes().to_vec());
    };
    if hex.len() % 2 != 0 {
        return None;
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).ok())
        .collect()
}

pub fn to_csv(records: &[SampleRecord]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in records {
        let value = encode_value(&r.value);
        writeln!(
            s,
            "{},{},{},{},{}",
            r.index,
            r.sim_time,
            r.metadata,
            value,
            u8::from(r.accepted)
        )
        .unwrap();
    }
    s
}

pub fn from_csv(text: &str, path: &Path) -> Result<Vec<SampleRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => bail!("{}:1: expected header `{HEADER}`", path.display()),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            bail!("{}: expected 5 fields, found {}", at(), f.len());
        }
        let accepted = match f[4].trim() {
            "1" => true,
            "0" => false,
            x => bail!("{}: accepted must be 0 or 1, found `{x}`", at()),
        };
        out.push(SampleRecord {
            index: f[0].trim().parse().with_context(at)?,
            sim_time: f[1].trim().parse().with_context(at)?,
            metadata: f[2].trim().parse().with_context(at)?,
            value: decode_value(f[3].trim())
                .with_context(|| format!("{}: bad value `{}`", at(), f[3]))?,
            accepted,
        });
    }
    Ok(out)
}
