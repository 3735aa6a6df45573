//! The six-rule reversible binary counter.
//!
//! The tape holds `_ 0^k _`; the machine starts in β on the right blank and
//! halts in α on the left blank after counting to `2^k`.

use thiserror::Error;

use crate::turing::{parse_tm, run, Stop, TMConfiguration, TMSpec, TuringError};

pub const COUNTER_TM: &str = "\
tapes 1
blank _
alphabet 0 1 _
states α β γ ξ
start β
move  β -> α [L]
write α [1] -> β [0]
write α [0] -> γ [1]
write ξ [0] -> γ [0]
write ξ [_] -> β [_]
move  γ -> ξ [R]
";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CounterError {
    #[error("counter needs at least one bit")]
    ZeroBits,
    #[error(transparent)]
    Turing(#[from] TuringError),
    #[error("counted {found} increments, expected {expected}")]
    IncrementMismatch { found: u64, expected: u64 },
    #[error("counter stopped in an unexpected configuration")]
    BadHalt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterReport {
    pub k: u32,
    pub increments: u64,
    pub total_steps: usize,
    pub trace: Vec<TMConfiguration>,
}

pub fn counter_spec() -> TMSpec {
    parse_tm(COUNTER_TM).expect("counter text is well formed")
}

/// Counter machine and its initial configuration for `k` bits.
pub fn build_counter(k: u32) -> Result<(TMSpec, TMConfiguration), CounterError> {
    if k == 0 {
        return Err(CounterError::ZeroBits);
    }
    let spec = counter_spec();
    let beta = spec.state_id("β").unwrap();
    let tape = format!("_{}_", "0".repeat(k as usize));
    let init = TMConfiguration::from_strs(beta, &[&tape], &[k as usize + 1]);
    Ok((spec, init))
}

/// Runs the counter to completion. Increments are configurations in β reading
/// blank, the initial configuration included.
pub fn verify_counter(k: u32, max_steps: usize) -> Result<CounterReport, CounterError> {
    let (spec, init) = build_counter(k)?;
    let out = run(&spec, &init, max_steps)?;
    let beta = spec.state_id("β").unwrap();
    let alpha = spec.state_id("α").unwrap();
    let blank = spec.blank();
    let increments = out
        .trace
        .iter()
        .filter(|c| c.state == beta && c.read(0) == blank)
        .count() as u64;
    let last = out.last();
    let zeros = last.tapes[0][1..=k as usize].iter().all(|&c| c == b'0');
    if out.stop != Stop::Halted || last.state != alpha || last.heads[0] != 0 || !zeros {
        return Err(CounterError::BadHalt);
    }
    let expected = 1u64 << k;
    if increments != expected {
        return Err(CounterError::IncrementMismatch {
            found: increments,
            expected,
        });
    }
    Ok(CounterReport {
        k,
        increments,
        total_steps: out.steps(),
        trace: out.trace,
    })
}
