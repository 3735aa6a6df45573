//! Strategies, oracles and invariant bodies shared by the per-module suites
//! and the acceptance runner. Each test binary uses a different subset.
#![allow(dead_code)]

pub mod props;

use std::collections::BTreeMap;

use adiasim::builder::{build_randomizer, randomizer_node, ChainSet};
use adiasim::graph::{GeneralMachine, Graph, Meta, NodeId, RegisterTriple};
use adiasim::turing::{check_reversible, Action, Dir, Rule, TMConfiguration, TMSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

pub const SYMS: [u8; 3] = [b'0', b'1', b'_'];

#[derive(Debug, Clone)]
pub enum RawAct {
    Keep,
    Write(u8, u8),
    Move(bool),
}

fn raw_act() -> impl Strategy<Value = RawAct> {
    prop_oneof![
        Just(RawAct::Keep),
        (0..3usize, 0..3usize).prop_map(|(a, b)| RawAct::Write(SYMS[a], SYMS[b])),
        any::<bool>().prop_map(RawAct::Move),
    ]
}

fn to_rule(from: u32, to: u32, kind: u8, acts: &[RawAct]) -> Rule {
    let conv = |a: &RawAct, allow_w: bool, allow_m: bool| match *a {
        RawAct::Write(r, w) if allow_w => Action::Write { read: r, write: w },
        RawAct::Move(l) if allow_m => Action::Move(if l { Dir::L } else { Dir::R }),
        _ => Action::Keep,
    };
    match kind % 3 {
        0 => Rule::write(
            from,
            to,
            acts.iter().map(|a| conv(a, true, false)).collect(),
        ),
        1 => Rule::movement(
            from,
            to,
            acts.iter().map(|a| conv(a, false, true)).collect(),
        ),
        _ => Rule::step(from, to, acts.iter().map(|a| conv(a, true, true)).collect()),
    }
}

fn make_spec(states: usize, tapes: usize, rules: Vec<Rule>) -> TMSpec {
    let names = (0..states).map(|i| format!("q{i}")).collect();
    TMSpec::new(tapes, b'_', SYMS.to_vec(), names, 0, rules, 0, tapes - 1).unwrap()
}

type RawRule = (u32, u32, u8, Vec<RawAct>);

fn raw_rules(states: u32, tapes: usize) -> impl Strategy<Value = Vec<RawRule>> {
    prop::collection::vec(
        (
            0..states,
            0..states,
            any::<u8>(),
            prop::collection::vec(raw_act(), tapes),
        ),
        0..12,
    )
}

/// Any machine over 1..=2 tapes, not necessarily deterministic.
pub fn any_spec() -> impl Strategy<Value = TMSpec> {
    (1usize..=4, 1usize..=2).prop_flat_map(|(n, m)| {
        raw_rules(n as u32, m).prop_map(move |raw| {
            make_spec(
                n,
                m,
                raw.iter()
                    .map(|(f, t, k, a)| to_rule(*f, *t, *k, a))
                    .collect(),
            )
        })
    })
}

/// Greedily keeps the rules that do not break rule-level reversibility.
pub fn reversible_spec() -> impl Strategy<Value = TMSpec> {
    (2usize..=5, 1usize..=2).prop_flat_map(|(n, m)| {
        raw_rules(n as u32, m).prop_map(move |raw| {
            let mut kept = Vec::new();
            for (f, t, k, a) in &raw {
                kept.push(to_rule(*f, *t, *k, a));
                if !check_reversible(&make_spec(n, m, kept.clone())).is_reversible() {
                    kept.pop();
                }
            }
            make_spec(n, m, kept)
        })
    })
}

/// Every configuration with tapes of exactly `len` cells.
pub fn all_configs(spec: &TMSpec, len: usize) -> Vec<TMConfiguration> {
    let m = spec.tapes();
    let per_tape: Vec<(Vec<u8>, usize)> = (0..3usize.pow(len as u32))
        .flat_map(|mut code| {
            let mut t = vec![0u8; len];
            for c in t.iter_mut() {
                *c = SYMS[code % 3];
                code /= 3;
            }
            (0..len).map(move |h| (t.clone(), h))
        })
        .collect();
    let mut out = Vec::new();
    for s in 0..spec.states().len() as u32 {
        let mut idx = vec![0usize; m];
        loop {
            let tapes = idx.iter().map(|&i| per_tape[i].0.clone()).collect();
            let heads = idx.iter().map(|&i| per_tape[i].1).collect();
            out.push(TMConfiguration::new(s, tapes, heads));
            let mut j = 0;
            while j < m {
                idx[j] += 1;
                if idx[j] < per_tape.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == m {
                break;
            }
        }
    }
    out
}

pub fn blank_regs(n: usize) -> Vec<RegisterTriple> {
    (0..n)
        .map(|i| RegisterTriple::new(vec![i as u8], Meta::ZERO, vec![]))
        .collect()
}

/// A partial injection on up to 12 configurations: a reversible deterministic machine.
pub fn reversible_machine() -> impl Strategy<Value = GeneralMachine> {
    (1usize..=12).prop_flat_map(|n| {
        (
            Just((0..n as NodeId).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(perm, keep)| {
                let succ = perm
                    .iter()
                    .zip(&keep)
                    .map(|(&p, &k)| if k { vec![p] } else { vec![] })
                    .collect();
                GeneralMachine::new(blank_regs(n), succ).unwrap()
            })
    })
}

/// A connected graph on `lo..=hi` nodes: a random spanning tree plus random chords.
pub fn connected_graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    (lo..=hi).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<u32>(), n - 1),
            prop::collection::vec((0..n as NodeId, 0..n as NodeId), 0..=n),
        )
            .prop_map(move |(parents, chords)| {
                let mut edges: Vec<(NodeId, NodeId)> = parents
                    .iter()
                    .enumerate()
                    .map(|(i, p)| ((p % (i as u32 + 1)), i as NodeId + 1))
                    .collect();
                edges.extend(chords);
                Graph::new(blank_regs(n), edges).unwrap()
            })
    })
}

/// True iff some closed walk of odd length at most n exists, i.e. the graph has an odd cycle.
pub fn has_odd_cycle(g: &Graph) -> bool {
    let n = g.node_count();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| g.has_edge(u as NodeId, v as NodeId))
                .collect()
        })
        .collect();
    let mut walk = adj.clone();
    for len in 1..=n {
        if len % 2 == 1 && (0..n).any(|i| walk[i][i]) {
            return true;
        }
        walk = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).any(|k| walk[i][k] && adj[k][j]))
                    .collect()
            })
            .collect();
    }
    false
}

/// Chains of the given lengths; chain `b` outputs `[b]` and its nodes are tagged by position.
pub fn toy_chains(r: u32, lens: &[usize]) -> ChainSet {
    let chains = lens
        .iter()
        .enumerate()
        .map(|(b, &l)| {
            (0..l)
                .map(|t| RegisterTriple::new(vec![t as u8], Meta::ZERO, vec![b as u8]))
                .collect()
        })
        .collect();
    ChainSet::new(r, chains).unwrap()
}

/// `2^r` chain lengths drawn from `1..6`.
pub fn chain_lengths() -> impl Strategy<Value = (u32, Vec<usize>)> {
    (1u32..=3, prop::collection::vec(1usize..6, 8))
        .prop_map(|(r, seed)| (r, seed.into_iter().cycle().take(1 << r).collect()))
}

/// Exact first-passage distribution on the last column via the absorbing-chain
/// linear system `(I - Q) h = R`, with the discrete unbiased walk.
pub fn exact_exit_distribution(r: u32) -> Vec<f64> {
    let rz = build_randomizer(r).unwrap();
    let g = rz.graph();
    let width = 1usize << (r + 1);
    let transient: Vec<NodeId> = (0..g.node_count() as NodeId)
        .filter(|&v| rz.layer_of(v) < r as usize)
        .collect();
    let n = transient.len();
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, width);
    for (i, &v) in transient.iter().enumerate() {
        let nb = g.neighbors(v);
        let p = 1.0 / nb.len() as f64;
        for &w in nb {
            if rz.layer_of(w) == r as usize {
                rhs[(i, (w as usize) % width)] += p;
            } else {
                q[(i, w as usize)] -= p;
            }
        }
    }
    let h = q.lu().solve(&rhs).unwrap();
    let start = randomizer_node(r, 0, 0) as usize;
    let mask = (1usize << r) - 1;
    let mut bits = vec![0.0; 1 << r];
    for s in 0..width {
        bits[s & mask] += h[(start, s)];
    }
    bits
}

pub fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 1..=12)
        .prop_filter("nonzero", |v| v.iter().sum::<f64>() > 1e-6)
}

pub fn as_map(v: &[f64]) -> BTreeMap<usize, f64> {
    v.iter().copied().enumerate().collect()
}

/// max over all events S of |P(S) - Q(S)|, by enumerating subsets.
pub fn max_event_gap(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    (0u32..1 << n)
        .map(|mask| {
            (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| at(p, i) / sp - at(q, i) / sq)
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}
