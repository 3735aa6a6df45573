//! Sampler constructions at the level of Turing machine rules.
//!
//! [`augment_with_counters`] turns a reversible machine `M` into `M1`, whose
//! runs all have the same length and end in a long output-holding phase.
//! [`assemble_lv_tm`] combines four tagged copies of `M1` with a randomizer on
//! the input tape; [`assemble_mc_tm`] builds the two-copy sub-machine and the
//! product machine that runs one copy forwards and the other backwards.
//!
//! Tapes of `M1`, after the tapes of `M`:
//!
//! ```text
//! comp   _ <k_comp bits> _     head on the right blank, counts ticks
//! pad    _ _ ... _             unary tally of idle ticks after M halts
//! delay  _ 0^d _               walked once at the start of the holding phase
//! out    _ 0^k_out _           head on the left blank, counts holding ticks
//! ```
//!
//! Generated state names use `/`; copy tags use `:` and product states `|`.
//! User state names may not contain these characters.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::builder::{output_of, BuildError};
use crate::graph::{
    encode_pair, layer_decompose, Graph, GraphError, LayeredGraph, Meta, NodeId, RegisterTriple,
};
use crate::turing::{
    check_reversible, predecessors, run, successors, Action, Dir, Rule, RuleKind, StateId, Stop,
    Symbol, TMConfiguration, TMSpec, TuringError,
};

#[derive(Debug, Error, PartialEq)]
pub enum TmBuildError {
    #[error("input machine is not reversible")]
    NotReversibleInput,
    #[error("step bound violated: {0}")]
    StepBoundViolated(String),
    #[error("state name `{0}` uses a reserved character")]
    ReservedName(String),
    #[error("input and output must be different tapes")]
    SharedInputOutput,
    #[error("start state has incoming rules")]
    StartHasIncoming,
    #[error("the blank cannot be `0` or `1`")]
    BadBlank,
    #[error("input {0} does not have the layout `_ bits _` with the head on the right blank")]
    BadInput(usize),
    #[error("tape {0} must be mirror symmetric around its head and equal across inputs")]
    Asymmetric(usize),
    #[error("need r >= 1 and T >= 1")]
    BadParams,
    #[error("reachable configuration graph exceeds {0} nodes")]
    TooLarge(usize),
    #[error("structure check failed: {0}")]
    Structure(String),
    #[error(transparent)]
    Turing(#[from] TuringError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    LasVegas,
    MonteCarlo,
}

/// Counter sizes and the holding-phase delay for `M1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentParams {
    /// Longest chain of `M`, in configurations.
    pub t: usize,
    pub r: u32,
    pub k_comp: u32,
    pub k_out: u32,
    /// Initial value of the computation counter.
    pub comp_start: u64,
    /// Cells on the delay tape.
    pub delay: usize,
    /// One extra step after the delay walk.
    pub odd: bool,
}

fn bits_for_at_least(n: u64) -> u32 {
    n.max(1).next_power_of_two().trailing_zeros()
}

impl AugmentParams {
    /// Counter sizes before any delay is added.
    /// LV: `T_comp >= T`, `T_out >= 2 T_comp + r + 1`, counter from 0.
    /// MC: `T_comp = T_out > T + r`, counter from `r + 1`.
    pub fn for_mode(t: usize, r: u32, mode: Mode) -> Result<Self, TmBuildError> {
        if t == 0 || r == 0 {
            return Err(TmBuildError::BadParams);
        }
        let (t64, r64) = (t as u64, r as u64);
        Ok(match mode {
            Mode::LasVegas => {
                let k_comp = bits_for_at_least(t64);
                let k_out = bits_for_at_least(2 * (1u64 << k_comp) + r64 + 1);
                Self {
                    t,
                    r,
                    k_comp,
                    k_out,
                    comp_start: 0,
                    delay: 0,
                    odd: false,
                }
            }
            Mode::MonteCarlo => {
                let k = bits_for_at_least(t64 + r64 + 1);
                Self {
                    t,
                    r,
                    k_comp: k,
                    k_out: k,
                    comp_start: r64 + 1,
                    delay: 0,
                    odd: false,
                }
            }
        })
    }

    pub fn t_comp(&self) -> u64 {
        1 << self.k_comp
    }

    pub fn t_out(&self) -> u64 {
        1 << self.k_out
    }
}

const RESERVED: &[char] = &['/', ':', '|'];

/// Incrementally collects states and rules; actions default to `Keep`.
struct Rules {
    tapes: usize,
    names: Vec<String>,
    index: HashMap<String, StateId>,
    rules: Vec<Rule>,
}

impl Rules {
    fn new(tapes: usize) -> Self {
        Self {
            tapes,
            names: Vec::new(),
            index: HashMap::new(),
            rules: Vec::new(),
        }
    }

    fn state(&mut self, name: &str) -> StateId {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = self.names.len() as StateId;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    fn write(&mut self, from: &str, to: &str, cells: &[(usize, Symbol, Symbol)]) {
        let mut actions = vec![Action::Keep; self.tapes];
        for &(t, read, write) in cells {
            actions[t] = Action::Write { read, write };
        }
        let (f, t) = (self.state(from), self.state(to));
        self.rules.push(Rule::write(f, t, actions));
    }

    fn mv(&mut self, from: &str, to: &str, tape: usize, d: Dir) {
        let mut actions = vec![Action::Keep; self.tapes];
        actions[tape] = Action::Move(d);
        let (f, t) = (self.state(from), self.state(to));
        self.rules.push(Rule::movement(f, t, actions));
    }

    fn raw(&mut self, from: &str, to: &str, kind: RuleKind, actions: Vec<Action>) {
        let (f, t) = (self.state(from), self.state(to));
        self.rules.push(Rule {
            from: f,
            to: t,
            kind,
            actions,
        });
    }

    fn finish(
        self,
        like: &TMSpec,
        start: &str,
        input: usize,
        output: usize,
    ) -> Result<TMSpec, TuringError> {
        let start = self.index[start];
        let mut alphabet = like.alphabet().to_vec();
        for c in [b'0', b'1'] {
            if !alphabet.contains(&c) {
                alphabet.push(c);
            }
        }
        TMSpec::new(
            self.tapes,
            like.blank(),
            alphabet,
            self.names,
            start,
            self.rules,
            input,
            output,
        )
    }
}

/// `M1` together with its tape layout and holding-phase bookkeeping.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub spec: TMSpec,
    pub params: AugmentParams,
    /// Tape count of the original machine; the four counter tapes follow.
    pub base_tapes: usize,
    /// Per state: whether it belongs to the output-holding phase.
    pub holding: Vec<bool>,
}

impl Augmented {
    pub fn comp_tape(&self) -> usize {
        self.base_tapes
    }

    pub fn pad_tape(&self) -> usize {
        self.base_tapes + 1
    }

    pub fn delay_tape(&self) -> usize {
        self.base_tapes + 2
    }

    pub fn out_tape(&self) -> usize {
        self.base_tapes + 3
    }

    /// Tapes whose head moves are kept by chiral inversion.
    pub fn exempt_tapes(&self) -> Vec<usize> {
        vec![
            self.spec.output_tape(),
            self.comp_tape(),
            self.pad_tape(),
            self.delay_tape(),
            self.out_tape(),
        ]
    }

    /// Initial `M1` configuration for an initial configuration of `M`.
    pub fn initial(&self, c: &TMConfiguration) -> TMConfiguration {
        let p = &self.params;
        let blank = self.spec.blank();
        let mut tapes = c.tapes.clone();
        let mut heads = c.heads.clone();
        let mut comp = vec![blank];
        comp.extend((0..p.k_comp).rev().map(|i| {
            if (p.comp_start >> i) & 1 == 1 {
                b'1'
            } else {
                b'0'
            }
        }));
        comp.push(blank);
        heads.push(comp.len() - 1);
        tapes.push(comp);
        tapes.push(vec![blank; p.t_comp() as usize + 1]);
        heads.push(0);
        let mut delay = vec![blank];
        delay.extend(std::iter::repeat_n(b'0', p.delay));
        delay.push(blank);
        tapes.push(delay);
        heads.push(0);
        let mut out = vec![blank];
        out.extend(std::iter::repeat_n(b'0', p.k_out as usize));
        out.push(blank);
        tapes.push(out);
        heads.push(0);
        TMConfiguration::new(self.spec.start(), tapes, heads)
    }

    /// Runs `M1` from `c0` (already augmented) and splits the trace into the
    /// computation phase and the holding phase.
    pub fn phases(&self, c0: &TMConfiguration) -> Result<(usize, usize), TmBuildError> {
        let bound = 64
            * (self.params.t_comp() as usize
                + self.params.t_out() as usize
                + self.params.delay
                + 8)
            * (self.params.k_comp.max(self.params.k_out) as usize + 2);
        let out = run(&self.spec, c0, bound)?;
        let last = out.last();
        if out.stop != Stop::Halted || !self.spec.state_name(last.state).ends_with("/end") {
            return Err(TmBuildError::StepBoundViolated(format!(
                "augmented run stopped in {}",
                self.spec.state_name(last.state)
            )));
        }
        let comp = out
            .trace
            .iter()
            .position(|c| self.holding[c.state as usize])
            .expect("ends in holding");
        if out.trace[comp..]
            .iter()
            .any(|c| !self.holding[c.state as usize])
        {
            return Err(TmBuildError::Structure(
                "holding phase is not contiguous".into(),
            ));
        }
        Ok((comp, out.trace.len() - comp))
    }
}

fn check_names(m: &TMSpec) -> Result<(), TmBuildError> {
    match m.states().iter().find(|s| s.contains(RESERVED)) {
        Some(s) => Err(TmBuildError::ReservedName(s.clone())),
        None => Ok(()),
    }
}

/// Builds `M1` from `M` with the given counter sizes. No validation runs.
pub fn augment_with_counters(m: &TMSpec, p: &AugmentParams) -> Result<Augmented, TmBuildError> {
    check_names(m)?;
    if m.input_tape() == m.output_tape() {
        return Err(TmBuildError::SharedInputOutput);
    }
    if !m.rules_into(m.start()).is_empty() {
        return Err(TmBuildError::StartHasIncoming);
    }
    let blank = m.blank();
    if blank == b'0' || blank == b'1' {
        return Err(TmBuildError::BadBlank);
    }
    let base = m.tapes();
    let (c, pd, dl, o) = (base, base + 1, base + 2, base + 3);
    let (b, z, one) = (blank, b'0', b'1');
    let mut rs = Rules::new(base + 4);
    for s in m.states() {
        rs.state(s);
    }
    let name = |s: StateId| m.state_name(s).to_string();
    for rule in m.rules() {
        let mut actions = rule.actions.clone();
        actions.extend([Action::Keep; 4]);
        rs.raw(
            &name(rule.from),
            &format!("{}/r", name(rule.to)),
            rule.kind,
            actions,
        );
    }
    let halting: HashSet<StateId> = m.halting_states().into_iter().collect();
    for s in 0..m.states().len() as StateId {
        let entered = !m.rules_into(s).is_empty();
        let terminal = halting.contains(&s);
        if !entered && !terminal {
            continue;
        }
        let a = name(s);
        let st = |suffix: &str| format!("{a}/{suffix}");
        if entered {
            rs.write(&st("r"), &st("a"), &[(c, b, b), (pd, b, b)]);
        }
        rs.mv(&st("a"), &st("b"), c, Dir::L);
        rs.write(&st("b"), &st("a"), &[(c, one, z)]);
        rs.write(&st("b"), &st("g"), &[(c, z, one)]);
        rs.mv(&st("g"), &st("x"), c, Dir::R);
        rs.write(&st("x"), &st("g"), &[(c, z, z)]);
        if entered {
            rs.write(&st("x"), &a, &[(c, b, b), (pd, b, b)]);
        }
        if !terminal {
            continue;
        }
        // Idle ticks after M halts, tallied on the pad tape.
        rs.write(&st("x"), &a, &[(c, b, b), (pd, one, one)]);
        rs.mv(&a, &st("p"), pd, Dir::R);
        rs.write(&st("p"), &st("a"), &[(c, b, b), (pd, b, one)]);
        rs.write(&st("b"), &st("w"), &[(c, b, b), (pd, one, one)]);
        // Holding phase: the delay walk, then the output counter.
        rs.write(&st("w"), &st("dd"), &[(dl, b, b)]);
        rs.mv(&st("dd"), &st("de"), dl, Dir::R);
        rs.write(&st("de"), &st("dd"), &[(dl, z, one)]);
        if p.odd {
            rs.write(&st("de"), &st("dk"), &[(dl, b, b)]);
            rs.write(&st("dk"), &st("og"), &[(o, b, b)]);
        } else {
            rs.write(&st("de"), &st("og"), &[(dl, b, b), (o, b, b)]);
        }
        rs.mv(&st("og"), &st("ox"), o, Dir::R);
        rs.write(&st("ox"), &st("og"), &[(o, z, z)]);
        rs.write(&st("ox"), &st("oc"), &[(o, b, b)]);
        rs.write(&st("oc"), &st("oa"), &[(o, b, b)]);
        rs.mv(&st("oa"), &st("ob"), o, Dir::L);
        rs.write(&st("ob"), &st("oa"), &[(o, one, z)]);
        rs.write(&st("ob"), &st("og"), &[(o, z, one)]);
        rs.write(&st("ob"), &st("end"), &[(o, b, b)]);
    }
    // A fresh entry state, so the randomizer's hand-off never matches a later configuration.
    let entry = format!("{}/s", name(m.start()));
    rs.write(&entry, &name(m.start()), &[(pd, b, b)]);
    let spec = rs.finish(m, &entry, m.input_tape(), m.output_tape())?;
    const HOLD: &[&str] = &["w", "dd", "de", "dk", "og", "ox", "oc", "oa", "ob", "end"];
    let holding = spec
        .states()
        .iter()
        .map(|s| {
            s.rsplit_once('/')
                .is_some_and(|(_, suf)| HOLD.contains(&suf))
        })
        .collect();
    Ok(Augmented {
        spec,
        params: *p,
        base_tapes: base,
        holding,
    })
}

/// Flips every head move on tapes outside `exempt`.
pub fn chiral_invert(spec: &TMSpec, exempt: &[usize]) -> TMSpec {
    let rules = spec
        .rules()
        .iter()
        .map(|r| Rule {
            actions: invert_actions(&r.actions, exempt),
            ..r.clone()
        })
        .collect();
    TMSpec::new(
        spec.tapes(),
        spec.blank(),
        spec.alphabet().to_vec(),
        spec.states().to_vec(),
        spec.start(),
        rules,
        spec.input_tape(),
        spec.output_tape(),
    )
    .expect("same shape as a valid spec")
}

fn invert_actions(actions: &[Action], exempt: &[usize]) -> Vec<Action> {
    actions
        .iter()
        .enumerate()
        .map(|(t, &a)| match a {
            Action::Move(d) if !exempt.contains(&t) => Action::Move(d.flip()),
            a => a,
        })
        .collect()
}

/// Reverses every tape outside `exempt`, keeping each head on the same cell.
pub fn mirror(c: &TMConfiguration, exempt: &[usize]) -> TMConfiguration {
    let mut m = c.clone();
    for t in 0..m.tapes.len() {
        if !exempt.contains(&t) {
            m.tapes[t].reverse();
            m.heads[t] = m.tapes[t].len() - 1 - m.heads[t];
        }
    }
    m
}

fn check_inputs(m: &TMSpec, r: u32, inputs: &[TMConfiguration]) -> Result<(), TmBuildError> {
    if inputs.len() != 1 << r {
        return Err(TmBuildError::BadParams);
    }
    let it = m.input_tape();
    let blank = m.blank();
    for (b, c) in inputs.iter().enumerate() {
        let mut want = vec![blank];
        want.extend((0..r).map(|i| if (b >> i) & 1 == 1 { b'1' } else { b'0' }));
        want.push(blank);
        if c.state != m.start()
            || c.tapes.len() != m.tapes()
            || c.tapes[it] != want
            || c.heads[it] != r as usize + 1
        {
            return Err(TmBuildError::BadInput(b));
        }
        for t in (0..m.tapes()).filter(|&t| t != it) {
            if c.tapes[t] != inputs[0].tapes[t] || c.heads[t] != inputs[0].heads[t] {
                return Err(TmBuildError::Asymmetric(t));
            }
        }
    }
    let c = &inputs[0];
    for t in (0..m.tapes()).filter(|&t| t != it && t != m.output_tape()) {
        let mut rev = c.tapes[t].clone();
        rev.reverse();
        if rev != c.tapes[t] || 2 * c.heads[t] + 1 != c.tapes[t].len() {
            return Err(TmBuildError::Asymmetric(t));
        }
    }
    Ok(())
}

/// Checks `M` and its inputs, sizes the counters for `mode` and picks the
/// delay so that the holding phase has the required length: at least
/// `2 * comp + 2r + 2` configurations for LV, exactly `comp + 2r + 2` for MC.
/// `inputs[b]` holds seed `b` as `_ bits _` on the input tape, head on the right blank.
pub fn prepare(
    m: &TMSpec,
    r: u32,
    t: usize,
    inputs: &[TMConfiguration],
    mode: Mode,
) -> Result<Augmented, TmBuildError> {
    check_names(m)?;
    if !check_reversible(m).is_reversible() {
        return Err(TmBuildError::NotReversibleInput);
    }
    check_inputs(m, r, inputs)?;
    let halting = m.halting_states();
    for (b, c) in inputs.iter().enumerate() {
        let out = run(m, c, t.saturating_sub(1)).map_err(|e| match e {
            TuringError::StepLimit(_) => {
                TmBuildError::StepBoundViolated(format!("input {b} runs past T = {t}"))
            }
            e => e.into(),
        })?;
        if out.stop != Stop::Halted || !halting.contains(&out.last().state) {
            return Err(TmBuildError::StepBoundViolated(format!(
                "input {b} does not reach a halting state"
            )));
        }
    }
    let randomizer = 2 * r as usize + 2;
    let mut p = AugmentParams::for_mode(t, r, mode)?;
    for _ in 0..32 {
        let base = augment_with_counters(m, &p)?;
        let (comp, hold) = base.phases(&base.initial(&inputs[0]))?;
        let need = match mode {
            Mode::LasVegas => (2 * comp + randomizer).max(hold),
            Mode::MonteCarlo => comp + randomizer,
        };
        if need < hold {
            p.k_comp += 1;
            continue;
        }
        let extra = need - hold;
        p.delay = extra / 2;
        p.odd = extra % 2 == 1;
        let aug = augment_with_counters(m, &p)?;
        for c in inputs {
            let got = aug.phases(&aug.initial(c))?;
            if got != (comp, need) {
                return Err(TmBuildError::Structure(format!(
                    "phases {got:?}, expected {:?}",
                    (comp, need)
                )));
            }
        }
        return Ok(aug);
    }
    Err(TmBuildError::Structure(
        "no counter size balances the holding phase".into(),
    ))
}

/// An assembled sampler machine with its measurement map.
#[derive(Debug, Clone)]
pub struct TmSampler {
    pub spec: TMSpec,
    /// Metadata per state.
    pub meta: Vec<i8>,
    pub m1: Augmented,
    /// A configuration on the randomizer's left edge, all seed bits 0.
    pub anchor: TMConfiguration,
    pub mode: Mode,
}

const RND_A: [&str; 2] = ["rnd:a0", "rnd:a1"];
const RND_B: [&str; 2] = ["rnd:b0", "rnd:b1"];

fn tagged(tag: &str, name: &str) -> String {
    format!("{tag}:{name}")
}

/// Copies of `m1` under `tags`, every rule also leading into each sibling copy,
/// plus the randomizer on the input tape.
fn tagged_copies(m1: &Augmented, forward: &[&str], inverted: &[&str]) -> Rules {
    let spec = &m1.spec;
    let exempt = m1.exempt_tapes();
    let mut rs = Rules::new(spec.tapes());
    for tags in [forward, inverted] {
        for tag in tags {
            for s in spec.states() {
                rs.state(&tagged(tag, s));
            }
        }
    }
    for (tags, flip) in [(forward, false), (inverted, true)] {
        for rule in spec.rules() {
            let actions = if flip {
                invert_actions(&rule.actions, &exempt)
            } else {
                rule.actions.clone()
            };
            for from in tags {
                for to in tags {
                    rs.raw(
                        &tagged(from, spec.state_name(rule.from)),
                        &tagged(to, spec.state_name(rule.to)),
                        rule.kind,
                        actions.clone(),
                    );
                }
            }
        }
    }
    let it = spec.input_tape();
    let b = spec.blank();
    for c in 0..2 {
        for x in [b'0', b'1'] {
            for y in [b'0', b'1'] {
                rs.write(RND_A[c], RND_B[c], &[(it, x, y)]);
            }
        }
        for a in RND_A {
            rs.mv(RND_B[c], a, it, Dir::R);
        }
    }
    let start = spec.state_name(spec.start());
    for a in RND_A {
        for tag in forward {
            rs.write(a, &tagged(tag, start), &[(it, b, b)]);
        }
    }
    for tag in inverted {
        for rb in RND_B {
            rs.write(&tagged(tag, start), rb, &[(it, b, b)]);
        }
    }
    rs
}

fn copy_meta(spec: &TMSpec, m1: &Augmented, signs: &[(&str, i8)]) -> Vec<i8> {
    spec.states()
        .iter()
        .map(|s| {
            let Some((tag, name)) = s.split_once(':') else {
                return 0;
            };
            let sign = signs.iter().find(|(t, _)| *t == tag).map_or(0, |&(_, v)| v);
            match m1.spec.state_id(name) {
                Some(id) if m1.holding[id as usize] => sign,
                _ => 0,
            }
        })
        .collect()
}

fn anchor(spec: &TMSpec, m1: &Augmented, input0: &TMConfiguration) -> TMConfiguration {
    let mut c = m1.initial(input0);
    c.state = spec.state_id(RND_B[0]).expect("randomizer state");
    c.heads[spec.input_tape()] = 0;
    c
}

/// The Las Vegas machine: forward copies `f0`, `f1` (holding metadata +1),
/// chirally inverted copies `b0`, `b1` (holding metadata -1) and the randomizer between them.
pub fn assemble_lv_tm(
    m: &TMSpec,
    r: u32,
    t: usize,
    inputs: &[TMConfiguration],
) -> Result<TmSampler, TmBuildError> {
    let m1 = prepare(m, r, t, inputs, Mode::LasVegas)?;
    let rs = tagged_copies(&m1, &["f0", "f1"], &["b0", "b1"]);
    let spec = rs.finish(
        &m1.spec,
        RND_B[0],
        m1.spec.input_tape(),
        m1.spec.output_tape(),
    )?;
    let meta = copy_meta(&spec, &m1, &[("f0", 1), ("f1", 1), ("b0", -1), ("b1", -1)]);
    let anchor = anchor(&spec, &m1, &inputs[0]);
    Ok(TmSampler {
        spec,
        meta,
        m1,
        anchor,
        mode: Mode::LasVegas,
    })
}

/// One Monte Carlo sub-machine: randomizer followed by forward copies `f0`, `f1`.
/// Metadata is 1 in the holding phase and 0 elsewhere.
pub fn assemble_mc_submachine_tm(
    m: &TMSpec,
    r: u32,
    t: usize,
    inputs: &[TMConfiguration],
) -> Result<TmSampler, TmBuildError> {
    let m1 = prepare(m, r, t, inputs, Mode::MonteCarlo)?;
    let rs = tagged_copies(&m1, &["f0", "f1"], &[]);
    let spec = rs.finish(
        &m1.spec,
        RND_B[0],
        m1.spec.input_tape(),
        m1.spec.output_tape(),
    )?;
    let meta = copy_meta(&spec, &m1, &[("f0", 1), ("f1", 1)]);
    let anchor = anchor(&spec, &m1, &inputs[0]);
    Ok(TmSampler {
        spec,
        meta,
        m1,
        anchor,
        mode: Mode::MonteCarlo,
    })
}

/// Reachable configurations of a machine, explored through both successors and predecessors.
#[derive(Debug, Clone)]
pub struct ConfigGraph {
    pub configs: Vec<TMConfiguration>,
    pub index: HashMap<TMConfiguration, NodeId>,
    pub graph: Graph,
}

fn visit(
    c: TMConfiguration,
    index: &mut HashMap<TMConfiguration, NodeId>,
    configs: &mut Vec<TMConfiguration>,
    queue: &mut VecDeque<NodeId>,
    limit: usize,
) -> Result<NodeId, TmBuildError> {
    if let Some(&id) = index.get(&c) {
        return Ok(id);
    }
    if configs.len() >= limit {
        return Err(TmBuildError::TooLarge(limit));
    }
    let id = configs.len() as NodeId;
    index.insert(c.clone(), id);
    configs.push(c);
    queue.push_back(id);
    Ok(id)
}

/// Undirected closure of `seeds` under single rule applications, capped at `limit` nodes.
pub fn reachable_graph(
    spec: &TMSpec,
    seeds: &[TMConfiguration],
    limit: usize,
    registers: impl Fn(&TMConfiguration) -> RegisterTriple,
) -> Result<ConfigGraph, TmBuildError> {
    let mut index: HashMap<TMConfiguration, NodeId> = HashMap::new();
    let mut configs = Vec::new();
    let mut queue = VecDeque::new();
    let mut edges = Vec::new();
    for s in seeds {
        visit(s.clone(), &mut index, &mut configs, &mut queue, limit)?;
    }
    while let Some(u) = queue.pop_front() {
        let c = configs[u as usize].clone();
        for w in successors(spec, &c) {
            let w = visit(w, &mut index, &mut configs, &mut queue, limit)?;
            edges.push((u, w));
        }
        for w in predecessors(spec, &c) {
            let w = visit(w, &mut index, &mut configs, &mut queue, limit)?;
            edges.push((w, u));
        }
    }
    let regs = configs.iter().map(registers).collect();
    let graph = Graph::new(regs, edges)?;
    Ok(ConfigGraph {
        configs,
        index,
        graph,
    })
}

impl TmSampler {
    pub fn registers(&self, c: &TMConfiguration) -> RegisterTriple {
        let meta = Meta::new(self.meta[c.state as usize] as i64).expect("metadata in range");
        RegisterTriple::new(c.encode(), meta, output_of(&self.spec, c))
    }

    pub fn config_graph(&self, limit: usize) -> Result<ConfigGraph, TmBuildError> {
        reachable_graph(&self.spec, std::slice::from_ref(&self.anchor), limit, |c| {
            self.registers(c)
        })
    }

    /// Layers counted from the far left: the halted inverted copies for LV,
    /// the randomizer's first layer for MC.
    pub fn layered(&self, cg: &ConfigGraph) -> Result<LayeredGraph, TmBuildError> {
        let roots: Vec<NodeId> = (0..cg.configs.len() as NodeId)
            .filter(|&n| {
                let c = &cg.configs[n as usize];
                match self.mode {
                    Mode::LasVegas => {
                        self.spec.state_name(c.state).starts_with('b')
                            && successors(&self.spec, c).is_empty()
                    }
                    Mode::MonteCarlo => predecessors(&self.spec, c).is_empty(),
                }
            })
            .collect();
        Ok(layer_decompose(&cg.graph, &roots)?)
    }

    /// Measurement-map sidecar: one `meta <state> <value>` line per state.
    pub fn meta_sidecar(&self) -> String {
        self.spec
            .states()
            .iter()
            .zip(&self.meta)
            .map(|(s, m)| format!("meta {s} {m}\n"))
            .collect()
    }
}

/// The Monte Carlo product machine. Copy 0 of the sub-machine runs forwards
/// and copy 1 backwards; tapes are copy 0's followed by copy 1's.
#[derive(Debug, Clone)]
pub struct McTm {
    pub spec: TMSpec,
    /// +1 when copy 0 is holding, -1 when copy 1 is, 0 otherwise.
    pub meta: Vec<i8>,
    pub sub: TmSampler,
    /// Sub-machine states of each product state.
    pub pairs: Vec<(StateId, StateId)>,
    /// Copy 0 on the randomizer's first layer, copy 1 halted.
    pub seed: TMConfiguration,
    pub sub_layers: usize,
}

/// A rule of the product machine, with states given as sub-machine pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductRule {
    pub from: (StateId, StateId),
    pub to: (StateId, StateId),
    pub kind: RuleKind,
    pub actions: Vec<Action>,
}

/// Applies `f` forwards on copy 0 and `g` backwards on copy 1:
/// `(A,a)->(B,b)` with `(C,c)->(D,d)` gives `((A,D),(a,d))->((B,C),(b,c))`.
pub fn product_rule(f: &Rule, g: &Rule) -> ProductRule {
    let kind = match (f.kind, g.kind) {
        (RuleKind::Write, RuleKind::Write) => RuleKind::Write,
        (RuleKind::Move, RuleKind::Move) => RuleKind::Move,
        _ => RuleKind::Step,
    };
    let mut actions = f.actions.clone();
    actions.extend(g.actions.iter().map(|a| a.inverse()));
    ProductRule {
        from: (f.from, g.to),
        to: (f.to, g.from),
        kind,
        actions,
    }
}

/// Builds the sub-machine, explores it to find which state pairs can meet
/// (copy 0 at layer `i`, copy 1 at layer `L-1-i`), and pairs every forward
/// rule of copy 0 with every backward rule of copy 1 between such pairs.
pub fn assemble_mc_tm(
    m: &TMSpec,
    r: u32,
    t: usize,
    inputs: &[TMConfiguration],
    limit: usize,
) -> Result<McTm, TmBuildError> {
    let sub = assemble_mc_submachine_tm(m, r, t, inputs)?;
    let cg = sub.config_graph(limit)?;
    let lg = sub.layered(&cg)?;
    let l = lg.layer_count();
    let hold = sub.m1.phases(&sub.m1.initial(&inputs[0]))?.1;
    if 2 * hold != l {
        return Err(BuildError::LayerMismatch(l - hold, hold).into());
    }
    let states_at: Vec<Vec<StateId>> = lg
        .layers()
        .iter()
        .map(|layer| {
            let mut s: Vec<StateId> = layer
                .iter()
                .map(|&n| cg.configs[n as usize].state)
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut allowed: HashSet<(StateId, StateId)> = HashSet::new();
    for i in 0..l {
        for &x in &states_at[i] {
            for &y in &states_at[l - 1 - i] {
                allowed.insert((x, y));
            }
        }
    }
    let mut ordered: Vec<(StateId, StateId)> = allowed.iter().copied().collect();
    ordered.sort_unstable();
    let ss = &sub.spec;
    let name = |(x, y): (StateId, StateId)| format!("{}|{}", ss.state_name(x), ss.state_name(y));
    let mut rs = Rules::new(2 * ss.tapes());
    for &p in &ordered {
        rs.state(&name(p));
    }
    for &(a, d) in &ordered {
        for &i in ss.rules_from(a) {
            let f = &ss.rules()[i];
            for &j in ss.rules_into(d) {
                let p = product_rule(f, &ss.rules()[j]);
                if allowed.contains(&p.to) {
                    rs.raw(&name(p.from), &name(p.to), p.kind, p.actions);
                }
            }
        }
    }
    let c0 = sub.anchor.clone();
    let c1 = cg.configs[lg.layers()[l - 1][0] as usize].clone();
    let start = name((c0.state, c1.state));
    let spec = rs.finish(ss, &start, ss.input_tape(), ss.output_tape())?;
    let pairs: Vec<(StateId, StateId)> = spec
        .states()
        .iter()
        .map(|s| {
            let (x, y) = s.split_once('|').expect("product name");
            (
                ss.state_id(x).expect("sub state"),
                ss.state_id(y).expect("sub state"),
            )
        })
        .collect();
    let meta = pairs
        .iter()
        .map(|&(x, y)| (sub.meta[x as usize] - sub.meta[y as usize]).signum())
        .collect();
    let mut tapes = c0.tapes.clone();
    tapes.extend(c1.tapes.iter().cloned());
    let mut heads = c0.heads.clone();
    heads.extend(&c1.heads);
    let seed = TMConfiguration::new(spec.start(), tapes, heads);
    Ok(McTm {
        spec,
        meta,
        sub,
        pairs,
        seed,
        sub_layers: l,
    })
}

impl McTm {
    /// The two sub-machine configurations inside a product configuration.
    pub fn split(&self, c: &TMConfiguration) -> (TMConfiguration, TMConfiguration) {
        let n = self.sub.spec.tapes();
        let (x, y) = self.pairs[c.state as usize];
        (
            TMConfiguration::new(x, c.tapes[..n].to_vec(), c.heads[..n].to_vec()),
            TMConfiguration::new(y, c.tapes[n..].to_vec(), c.heads[n..].to_vec()),
        )
    }

    /// Output register: both sub-machine outputs, packed as a pair.
    pub fn registers(&self, c: &TMConfiguration) -> RegisterTriple {
        let (a, b) = self.split(c);
        let meta = Meta::new(self.meta[c.state as usize] as i64).expect("metadata in range");
        let out = encode_pair(
            &output_of(&self.sub.spec, &a),
            &output_of(&self.sub.spec, &b),
        );
        RegisterTriple::new(c.encode(), meta, out)
    }

    pub fn config_graph(&self, limit: usize) -> Result<ConfigGraph, TmBuildError> {
        reachable_graph(&self.spec, std::slice::from_ref(&self.seed), limit, |c| {
            self.registers(c)
        })
    }

    /// Layers counted from configurations without predecessors (copy 0 on the randomizer's first layer).
    pub fn layered(&self, cg: &ConfigGraph) -> Result<LayeredGraph, TmBuildError> {
        let roots: Vec<NodeId> = (0..cg.configs.len() as NodeId)
            .filter(|&n| predecessors(&self.spec, &cg.configs[n as usize]).is_empty())
            .collect();
        Ok(layer_decompose(&cg.graph, &roots)?)
    }

    pub fn meta_sidecar(&self) -> String {
        self.spec
            .states()
            .iter()
            .zip(&self.meta)
            .map(|(s, m)| format!("meta {s} {m}\n"))
            .collect()
    }
}
