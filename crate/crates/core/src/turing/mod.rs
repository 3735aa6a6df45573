//! Multi-tape Turing machines on bounded tapes.
//!
//! Every rule is a vector of per-tape actions: keep, write (read one symbol,
//! write another) or move. Plain write rules and move rules are the two forms
//! used by hand-written machines; `step` rules mix writes and moves across
//! tapes and appear in product machines.

mod interp;
mod parse;
mod reversible;

pub use interp::{
    chains, predecessors, run, step_backward, step_forward, successors, Back, ChainSet, Fwd,
    RunOutcome, Stop,
};
pub use parse::{parse_tm, print_tm};
pub use reversible::{check_reversible, ReversibilityReport};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub type StateId = u32;
pub type Symbol = u8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TuringError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: expected {expected} tape entries, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown symbol `{symbol}`")]
    UnknownSymbol { line: usize, symbol: String },
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("rules {0} and {1} both match the current configuration")]
    NondeterministicMatch(usize, usize),
    #[error("no halt within {0} steps")]
    StepLimit(usize),
    #[error("inputs {a} and {b} reach a common configuration")]
    ChainCollision { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    L,
    R,
}

impl Dir {
    pub fn delta(self) -> isize {
        match self {
            Dir::L => -1,
            Dir::R => 1,
        }
    }

    pub fn flip(self) -> Dir {
        match self {
            Dir::L => Dir::R,
            Dir::R => Dir::L,
        }
    }
}

/// What a rule does to one tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Read anything, write it back, do not move.
    Keep,
    /// Requires `read` under the head and replaces it with `write`.
    Write {
        read: Symbol,
        write: Symbol,
    },
    Move(Dir),
}

impl Action {
    /// The same action run backwards.
    pub fn inverse(self) -> Action {
        match self {
            Action::Keep => Action::Keep,
            Action::Write { read, write } => Action::Write {
                read: write,
                write: read,
            },
            Action::Move(d) => Action::Move(d.flip()),
        }
    }

    /// Symbol required under the head for this action to fire, if any.
    pub fn read(self) -> Option<Symbol> {
        match self {
            Action::Write { read, .. } => Some(read),
            _ => None,
        }
    }

    /// Symbol left under the head after the action, if it is fixed.
    pub fn written(self) -> Option<Symbol> {
        match self {
            Action::Write { write, .. } => Some(write),
            _ => None,
        }
    }
}

/// Syntactic form of a rule, kept for printing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Write,
    Move,
    Step,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub from: StateId,
    pub to: StateId,
    pub kind: RuleKind,
    pub actions: Vec<Action>,
}

impl Rule {
    pub fn write(from: StateId, to: StateId, actions: Vec<Action>) -> Self {
        Self {
            from,
            to,
            kind: RuleKind::Write,
            actions,
        }
    }

    pub fn movement(from: StateId, to: StateId, actions: Vec<Action>) -> Self {
        Self {
            from,
            to,
            kind: RuleKind::Move,
            actions,
        }
    }

    pub fn step(from: StateId, to: StateId, actions: Vec<Action>) -> Self {
        Self {
            from,
            to,
            kind: RuleKind::Step,
            actions,
        }
    }
}

/// A validated multi-tape machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TMSpec {
    tapes: usize,
    blank: Symbol,
    alphabet: Vec<Symbol>,
    states: Vec<String>,
    start: StateId,
    rules: Vec<Rule>,
    input_tape: usize,
    output_tape: usize,
    state_index: HashMap<String, StateId>,
    from_index: Vec<Vec<usize>>,
    into_index: Vec<Vec<usize>>,
}

/// Symbols may be any printable ASCII character that is not reserved by the text format.
pub fn valid_symbol(c: u8) -> bool {
    c.is_ascii_graphic() && !b"[],*>#LNR".contains(&c)
}

impl TMSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tapes: usize,
        blank: Symbol,
        alphabet: Vec<Symbol>,
        states: Vec<String>,
        start: StateId,
        rules: Vec<Rule>,
        input_tape: usize,
        output_tape: usize,
    ) -> Result<Self, TuringError> {
        let bad = |m: String| Err(TuringError::Invalid(m));
        if tapes == 0 {
            return bad("at least one tape is required".into());
        }
        if input_tape >= tapes || output_tape >= tapes {
            return bad("input/output tape index out of range".into());
        }
        for &c in &alphabet {
            if !valid_symbol(c) {
                return bad(format!("`{}` cannot be used as a symbol", c as char));
            }
        }
        if !alphabet.contains(&blank) {
            return bad("blank is not in the alphabet".into());
        }
        let mut state_index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || "[]#".contains(c)) {
                return bad(format!("`{s}` is not a valid state name"));
            }
            if state_index.insert(s.clone(), i as StateId).is_some() {
                return bad(format!("state `{s}` declared twice"));
            }
        }
        if start as usize >= states.len() {
            return bad("start state out of range".into());
        }
        let mut from_index = vec![Vec::new(); states.len()];
        let mut into_index = vec![Vec::new(); states.len()];
        for (i, r) in rules.iter().enumerate() {
            if r.from as usize >= states.len() || r.to as usize >= states.len() {
                return bad(format!("rule {i} references an unknown state"));
            }
            if r.actions.len() != tapes {
                return bad(format!(
                    "rule {i} has {} tape entries, expected {tapes}",
                    r.actions.len()
                ));
            }
            for a in &r.actions {
                let ok = match (*a, r.kind) {
                    (Action::Write { read, write }, RuleKind::Write | RuleKind::Step) => {
                        alphabet.contains(&read) && alphabet.contains(&write)
                    }
                    (Action::Move(_), RuleKind::Move | RuleKind::Step) => true,
                    (Action::Keep, _) => true,
                    _ => false,
                };
                if !ok {
                    return bad(format!("rule {i} has an action not allowed in its form"));
                }
            }
            from_index[r.from as usize].push(i);
            into_index[r.to as usize].push(i);
        }
        Ok(Self {
            tapes,
            blank,
            alphabet,
            states,
            start,
            rules,
            input_tape,
            output_tape,
            state_index,
            from_index,
            into_index,
        })
    }

    pub fn tapes(&self) -> usize {
        self.tapes
    }

    pub fn blank(&self) -> Symbol {
        self.blank
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s as usize]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn input_tape(&self) -> usize {
        self.input_tape
    }

    pub fn output_tape(&self) -> usize {
        self.output_tape
    }

    /// Indices of rules leaving `s`.
    pub fn rules_from(&self, s: StateId) -> &[usize] {
        &self.from_index[s as usize]
    }

    /// Indices of rules entering `s`.
    pub fn rules_into(&self, s: StateId) -> &[usize] {
        &self.into_index[s as usize]
    }

    /// States with no outgoing rule.
    pub fn halting_states(&self) -> Vec<StateId> {
        (0..self.states.len() as StateId)
            .filter(|&s| self.from_index[s as usize].is_empty())
            .collect()
    }
}

/// State, tape contents and head positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TMConfiguration {
    pub state: StateId,
    pub tapes: Vec<Vec<Symbol>>,
    pub heads: Vec<usize>,
}

impl TMConfiguration {
    pub fn new(state: StateId, tapes: Vec<Vec<Symbol>>, heads: Vec<usize>) -> Self {
        assert_eq!(tapes.len(), heads.len());
        assert!(
            tapes.iter().zip(&heads).all(|(t, &h)| h < t.len()),
            "head off tape"
        );
        Self {
            state,
            tapes,
            heads,
        }
    }

    /// Builds a configuration from tape strings such as `"_00_"`.
    pub fn from_strs(state: StateId, tapes: &[&str], heads: &[usize]) -> Self {
        Self::new(
            state,
            tapes.iter().map(|t| t.as_bytes().to_vec()).collect(),
            heads.to_vec(),
        )
    }

    #[inline]
    pub fn read(&self, tape: usize) -> Symbol {
        self.tapes[tape][self.heads[tape]]
    }

    /// Serialized work register: state id, heads and tape contents.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.state.to_le_bytes());
        for (t, &h) in self.tapes.iter().zip(&self.heads) {
            out.extend_from_slice(&(h as u32).to_le_bytes());
            out.extend_from_slice(&(t.len() as u32).to_le_bytes());
            out.extend_from_slice(t);
        }
        out
    }

    /// Human-readable form using `spec` for the state name; heads are bracketed.
    pub fn display<'a>(&'a self, spec: &'a TMSpec) -> impl fmt::Display + 'a {
        struct D<'a>(&'a TMConfiguration, &'a TMSpec);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.1.state_name(self.0.state))?;
                for (t, &h) in self.0.tapes.iter().zip(&self.0.heads) {
                    f.write_str(" ")?;
                    for (i, &c) in t.iter().enumerate() {
                        if i == h {
                            write!(f, "[{}]", c as char)?;
                        } else {
                            write!(f, "{}", c as char)?;
                        }
                    }
                }
                Ok(())
            }
        }
        D(self, spec)
    }
}
