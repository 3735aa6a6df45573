use std::collections::HashMap;

use super::{Action, Rule, TMConfiguration, TMSpec, TuringError};

/// Result of a forward step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fwd {
    Next(TMConfiguration),
    Halted,
    Boundary,
}

/// Result of a backward step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Back {
    Prev(TMConfiguration),
    Initial,
    Boundary,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Halted,
    Boundary,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<TMConfiguration>,
    pub stop: Stop,
}

impl RunOutcome {
    pub fn steps(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn last(&self) -> &TMConfiguration {
        self.trace.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct ChainSet {
    pub chains: Vec<Vec<TMConfiguration>>,
    /// Largest number of configurations in any chain.
    pub max_len: usize,
}

fn matches(rule: &Rule, c: &TMConfiguration) -> bool {
    rule.from == c.state
        && rule
            .actions
            .iter()
            .enumerate()
            .all(|(t, a)| a.read().is_none_or(|s| c.read(t) == s))
}

/// Applies a rule already known to match; `None` if a head would leave its tape.
fn apply(rule: &Rule, c: &TMConfiguration) -> Option<TMConfiguration> {
    let mut next = c.clone();
    next.state = rule.to;
    for (t, a) in rule.actions.iter().enumerate() {
        match *a {
            Action::Keep => {}
            Action::Write { write, .. } => {
                let h = next.heads[t];
                next.tapes[t][h] = write;
            }
            Action::Move(d) => {
                let h = next.heads[t].checked_add_signed(d.delta())?;
                if h >= next.tapes[t].len() {
                    return None;
                }
                next.heads[t] = h;
            }
        }
    }
    Some(next)
}

fn could_produce(rule: &Rule, c: &TMConfiguration) -> bool {
    rule.to == c.state
        && rule
            .actions
            .iter()
            .enumerate()
            .all(|(t, a)| a.written().is_none_or(|s| c.read(t) == s))
}

/// Undoes a rule that could have produced `c`; `None` if the predecessor would be off-tape.
fn unapply(rule: &Rule, c: &TMConfiguration) -> Option<TMConfiguration> {
    let mut prev = c.clone();
    prev.state = rule.from;
    for (t, a) in rule.actions.iter().enumerate() {
        match *a {
            Action::Keep => {}
            Action::Write { read, .. } => {
                let h = prev.heads[t];
                prev.tapes[t][h] = read;
            }
            Action::Move(d) => {
                let h = prev.heads[t].checked_add_signed(-d.delta())?;
                if h >= prev.tapes[t].len() {
                    return None;
                }
                prev.heads[t] = h;
            }
        }
    }
    Some(prev)
}

pub fn step_forward(spec: &TMSpec, c: &TMConfiguration) -> Result<Fwd, TuringError> {
    let mut found: Option<usize> = None;
    for &i in spec.rules_from(c.state) {
        if matches(&spec.rules()[i], c) {
            if let Some(j) = found {
                return Err(TuringError::NondeterministicMatch(j, i));
            }
            found = Some(i);
        }
    }
    Ok(match found {
        None => Fwd::Halted,
        Some(i) => apply(&spec.rules()[i], c).map_or(Fwd::Boundary, Fwd::Next),
    })
}

pub fn step_backward(spec: &TMSpec, c: &TMConfiguration) -> Result<Back, TuringError> {
    let mut found: Option<usize> = None;
    for &i in spec.rules_into(c.state) {
        if could_produce(&spec.rules()[i], c) {
            if let Some(j) = found {
                return Err(TuringError::NondeterministicMatch(j, i));
            }
            found = Some(i);
        }
    }
    Ok(match found {
        None => Back::Initial,
        Some(i) => unapply(&spec.rules()[i], c).map_or(Back::Boundary, Back::Prev),
    })
}

/// All configurations reachable in one forward step (any matching rule, on-tape only).
pub fn successors(spec: &TMSpec, c: &TMConfiguration) -> Vec<TMConfiguration> {
    spec.rules_from(c.state)
        .iter()
        .map(|&i| &spec.rules()[i])
        .filter(|r| matches(r, c))
        .filter_map(|r| apply(r, c))
        .collect()
}

/// All on-tape configurations that step to `c` under some rule.
pub fn predecessors(spec: &TMSpec, c: &TMConfiguration) -> Vec<TMConfiguration> {
    spec.rules_into(c.state)
        .iter()
        .map(|&i| &spec.rules()[i])
        .filter(|r| could_produce(r, c))
        .filter_map(|r| unapply(r, c))
        .collect()
}

/// Runs until no rule applies or a head would leave its tape.
pub fn run(
    spec: &TMSpec,
    c0: &TMConfiguration,
    max_steps: usize,
) -> Result<RunOutcome, TuringError> {
    let mut trace = vec![c0.clone()];
    loop {
        let stop = match step_forward(spec, trace.last().unwrap())? {
            Fwd::Next(n) => {
                if trace.len() > max_steps {
                    return Err(TuringError::StepLimit(max_steps));
                }
                trace.push(n);
                continue;
            }
            Fwd::Halted => Stop::Halted,
            Fwd::Boundary => Stop::Boundary,
        };
        return Ok(RunOutcome { trace, stop });
    }
}

/// One forward trace per input, checking that no two traces share a configuration.
pub fn chains(
    spec: &TMSpec,
    inputs: &[TMConfiguration],
    max_steps: usize,
) -> Result<ChainSet, TuringError> {
    let mut owner: HashMap<TMConfiguration, usize> = HashMap::new();
    let mut out = Vec::with_capacity(inputs.len());
    for (k, c0) in inputs.iter().enumerate() {
        let trace = run(spec, c0, max_steps)?.trace;
        for c in &trace {
            if let Some(&a) = owner.get(c) {
                if a != k {
                    return Err(TuringError::ChainCollision { a, b: k });
                }
            }
            owner.insert(c.clone(), k);
        }
        out.push(trace);
    }
    let max_len = out.iter().map(Vec::len).max().unwrap_or(0);
    Ok(ChainSet {
        chains: out,
        max_len,
    })
}
