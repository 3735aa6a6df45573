//! Metropolis kinetics on configuration graphs.
//!
//! Every directed edge `U -> W` fires at its own Metropolis rate, so a node of
//! degree `d` in an adiabatic embedding leaves at total rate `d * k_rate`.
//! Under this convention the adiabatic stationary distribution is uniform.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, LayeredGraph, NodeId};
use crate::trials::run_trials;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("exact analysis is limited to {limit} nodes, graph has {nodes}")]
    SizeLimit { nodes: usize, limit: usize },
    #[error("need one free energy per node ({nodes}), got {found}")]
    EnergyCount { nodes: usize, found: usize },
    #[error("kT and k_rate must be positive")]
    NonPositive,
    #[error("laziness must lie in [0, 1)")]
    Laziness,
}

pub const EXACT_LIMIT: usize = 2000;

/// Eq. 1 of the kinetic model: uphill moves are slowed by the Boltzmann factor.
#[inline]
pub fn metropolis_rate(dg_a: f64, dg_b: f64, k_rate: f64, kt: f64) -> f64 {
    if dg_a < dg_b {
        k_rate * (-(dg_b - dg_a) / kt).exp()
    } else {
        k_rate
    }
}

/// A graph with free energies, temperature and base rate.
#[derive(Debug, Clone)]
pub struct Embedding<'g> {
    graph: &'g Graph,
    dg: Vec<f64>,
    kt: f64,
    k_rate: f64,
    adiabatic: bool,
}

impl<'g> Embedding<'g> {
    /// All free energies equal, `kT = k_rate = 1`.
    pub fn adiabatic(graph: &'g Graph) -> Self {
        Self {
            graph,
            dg: vec![0.0; graph.node_count()],
            kt: 1.0,
            k_rate: 1.0,
            adiabatic: true,
        }
    }

    pub fn new(
        graph: &'g Graph,
        dg: Vec<f64>,
        kt: f64,
        k_rate: f64,
    ) -> Result<Self, DynamicsError> {
        if dg.len() != graph.node_count() {
            return Err(DynamicsError::EnergyCount {
                nodes: graph.node_count(),
                found: dg.len(),
            });
        }
        if !(kt > 0.0 && k_rate > 0.0) {
            return Err(DynamicsError::NonPositive);
        }
        let adiabatic = dg.windows(2).all(|w| w[0] == w[1]);
        Ok(Self {
            graph,
            dg,
            kt,
            k_rate,
            adiabatic,
        })
    }

    pub fn with_rate(mut self, k_rate: f64) -> Self {
        assert!(k_rate > 0.0);
        self.k_rate = k_rate;
        self
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn is_adiabatic(&self) -> bool {
        self.adiabatic
    }

    pub fn k_rate(&self) -> f64 {
        self.k_rate
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    #[inline]
    pub fn rate(&self, u: NodeId, w: NodeId) -> f64 {
        if self.adiabatic {
            self.k_rate
        } else {
            metropolis_rate(
                self.dg[u as usize],
                self.dg[w as usize],
                self.k_rate,
                self.kt,
            )
        }
    }

    /// Total rate of leaving `u`.
    pub fn exit_rate(&self, u: NodeId) -> f64 {
        if self.adiabatic {
            self.k_rate * self.graph.degree(u) as f64
        } else {
            self.graph
                .neighbors(u)
                .iter()
                .map(|&w| self.rate(u, w))
                .sum()
        }
    }
}

/// Equilibrium distribution `exp(-dG/kT) / Z`.
pub fn boltzmann(e: &Embedding) -> Vec<f64> {
    let min = e.dg.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e.dg.iter().map(|&g| (-(g - min) / e.kt).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// A continuous-time walker. The next jump time is drawn when the walker
/// arrives at a node, so reading the position never consumes randomness.
#[derive(Debug, Clone)]
pub struct Walker<R: Rng> {
    node: NodeId,
    time: f64,
    next_jump: f64,
    jumps: u64,
    rng: R,
}

impl<R: Rng> Walker<R> {
    pub fn new(e: &Embedding, start: NodeId, rng: R) -> Self {
        let mut w = Self {
            node: start,
            time: 0.0,
            next_jump: 0.0,
            jumps: 0,
            rng,
        };
        w.next_jump = w.draw_holding(e);
        w
    }

    fn draw_holding(&mut self, e: &Embedding) -> f64 {
        let rate = e.exit_rate(self.node);
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        let u: f64 = self.rng.random();
        self.time - (1.0 - u).ln() / rate
    }

    fn jump(&mut self, e: &Embedding) {
        let nb = e.graph.neighbors(self.node);
        self.time = self.next_jump;
        self.node = if e.adiabatic {
            nb[self.rng.random_range(0..nb.len())]
        } else {
            let total: f64 = nb.iter().map(|&w| e.rate(self.node, w)).sum();
            let mut x = self.rng.random::<f64>() * total;
            let mut pick = *nb.last().unwrap();
            for &w in nb {
                x -= e.rate(self.node, w);
                if x < 0.0 {
                    pick = w;
                    break;
                }
            }
            pick
        };
        self.jumps += 1;
        self.next_jump = self.draw_holding(e);
    }

    /// Advances to time `t`, calling `on_jump(time, node)` after every jump.
    pub fn advance_with(
        &mut self,
        e: &Embedding,
        t: f64,
        mut on_jump: impl FnMut(f64, NodeId),
    ) -> NodeId {
        while self.next_jump <= t {
            self.jump(e);
            on_jump(self.time, self.node);
        }
        self.time = self.time.max(t);
        self.node
    }

    /// Advances to time `t` and returns the node occupied then.
    pub fn advance_to(&mut self, e: &Embedding, t: f64) -> NodeId {
        self.advance_with(e, t, |_, _| {})
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }
}

/// Which jumps a trace keeps.
#[derive(Debug, Clone, Copy)]
pub enum Record<'a> {
    All,
    /// Only jumps that change the layer index.
    LayerCrossings(&'a LayeredGraph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub seed: u64,
    /// `(time, node)` pairs; the first is `(0, start)`.
    pub events: Vec<(f64, NodeId)>,
    /// Node occupied at the end of the run.
    pub end: NodeId,
    pub jumps: u64,
}

/// Exact stochastic simulation up to `duration`.
pub fn simulate_ct(
    e: &Embedding,
    start: NodeId,
    duration: f64,
    seed: u64,
    record: Record,
) -> WalkTrace {
    let mut w = Walker::new(e, start, ChaCha8Rng::seed_from_u64(seed));
    let mut events = vec![(0.0, start)];
    let mut prev = start;
    let end = w.advance_with(e, duration, |t, v| {
        let keep = match record {
            Record::All => true,
            Record::LayerCrossings(lg) => lg.layer_of(v) != lg.layer_of(prev),
        };
        if keep {
            events.push((t, v));
        }
        prev = v;
    });
    WalkTrace {
        seed,
        events,
        end,
        jumps: w.jumps(),
    }
}

/// Lazy discrete-time version of the adiabatic walk; returns the final node.
///
/// Each step stays put with probability `laziness`; otherwise it picks one of
/// `d_max` neighbor slots uniformly and moves if that slot is occupied. This is
/// the uniformized per-edge chain, so its stationary distribution is uniform
/// on irregular graphs too (a plain uniform-neighbor walk would weight by degree).
pub fn simulate_discrete<R: Rng>(
    g: &Graph,
    start: NodeId,
    steps: u64,
    rng: &mut R,
    laziness: f64,
) -> Result<NodeId, DynamicsError> {
    if !(0.0..1.0).contains(&laziness) {
        return Err(DynamicsError::Laziness);
    }
    let d_max = (0..g.node_count() as NodeId)
        .map(|v| g.degree(v))
        .max()
        .unwrap_or(0);
    let mut v = start;
    if d_max == 0 {
        return Ok(v);
    }
    for _ in 0..steps {
        if rng.random::<f64>() < laziness {
            continue;
        }
        let nb = g.neighbors(v);
        let slot = rng.random_range(0..d_max);
        if slot < nb.len() {
            v = nb[slot];
        }
    }
    Ok(v)
}

/// Spectral solution of the master equation for repeated queries.
///
/// The generator is symmetrized with the Boltzmann weights (detailed balance),
/// diagonalized once, and `p(t)` is then a sum of decaying modes.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    sqrt_pi: DVector<f64>,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ExactSolver {
    pub fn new(e: &Embedding) -> Result<Self, DynamicsError> {
        let n = e.graph.node_count();
        if n > EXACT_LIMIT {
            return Err(DynamicsError::SizeLimit {
                nodes: n,
                limit: EXACT_LIMIT,
            });
        }
        let pi = boltzmann(e);
        let sqrt_pi = DVector::from_iterator(n, pi.iter().map(|p| p.sqrt()));
        let mut s = DMatrix::<f64>::zeros(n, n);
        for u in 0..n as NodeId {
            s[(u as usize, u as usize)] = -e.exit_rate(u);
            for &w in e.graph.neighbors(u) {
                let (ui, wi) = (u as usize, w as usize);
                s[(wi, ui)] = e.rate(u, w) * sqrt_pi[ui] / sqrt_pi[wi];
            }
        }
        // Average with the transpose to remove rounding asymmetry.
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        Ok(Self {
            sqrt_pi,
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// Distribution at time `t` starting from an arbitrary distribution `p0`.
    pub fn evolve(&self, p0: &[f64], t: f64) -> Vec<f64> {
        if t == 0.0 {
            return p0.to_vec();
        }
        let q0 = DVector::from_iterator(
            p0.len(),
            p0.iter().zip(self.sqrt_pi.iter()).map(|(p, s)| p / s),
        );
        let mut coef = self.vectors.tr_mul(&q0);
        for (c, &l) in coef.iter_mut().zip(self.values.iter()) {
            *c *= (l * t).exp();
        }
        let q = &self.vectors * coef;
        q.iter()
            .zip(self.sqrt_pi.iter())
            .map(|(x, s)| (x * s).max(0.0))
            .collect()
    }

    /// Distribution at time `t` starting from `start`.
    pub fn occupancy(&self, start: NodeId, t: f64) -> Vec<f64> {
        let mut p0 = vec![0.0; self.sqrt_pi.len()];
        p0[start as usize] = 1.0;
        self.evolve(&p0, t)
    }
}

/// Probability of each node at time `t` starting from `start`.
pub fn exact_occupancy(e: &Embedding, start: NodeId, t: f64) -> Result<Vec<f64>, DynamicsError> {
    Ok(ExactSolver::new(e)?.occupancy(start, t))
}

/// Fraction of trials that visit each layer within `duration`, starting from
/// the first node of `start_layer` on an adiabatic embedding.
pub fn layer_hitting_profile(
    g: &LayeredGraph,
    start_layer: usize,
    duration: f64,
    trials: usize,
    seed: u64,
) -> Vec<f64> {
    let e = Embedding::adiabatic(g.graph());
    let start = g.layers()[start_layer][0];
    let l = g.layer_count();
    let hits = run_trials(trials, seed, |_, rng| {
        let mut seen = vec![false; l];
        seen[start_layer] = true;
        let mut w = Walker::new(&e, start, rng.clone());
        w.advance_with(&e, duration, |_, v| seen[g.layer_of(v)] = true);
        seen
    });
    let mut out = vec![0.0; l];
    for h in &hits {
        for (o, &s) in out.iter_mut().zip(h) {
            if s {
                *o += 1.0;
            }
        }
    }
    let n = trials.max(1) as f64;
    out.into_iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Meta, RegisterTriple};

    fn path(n: usize) -> Graph {
        let regs = vec![RegisterTriple::new(vec![], Meta::ZERO, vec![]); n];
        Graph::new(regs, (1..n as NodeId).map(|i| (i - 1, i)).collect()).unwrap()
    }

    #[test]
    fn rate_examples() {
        assert_eq!(metropolis_rate(1.0, 1.0, 3.0, 1.0), 3.0);
        assert!((metropolis_rate(0.0, 2f64.ln(), 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(metropolis_rate(5.0, 1.0, 2.0, 1.0), 2.0);
    }

    #[test]
    fn boltzmann_examples() {
        let g = path(4);
        assert!(boltzmann(&Embedding::adiabatic(&g))
            .iter()
            .all(|&p| (p - 0.25).abs() < 1e-15));
        let g2 = path(2);
        let e = Embedding::new(&g2, vec![0.0, 2f64.ln()], 1.0, 1.0).unwrap();
        let p = boltzmann(&e);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(boltzmann(&Embedding::adiabatic(&path(1))), vec![1.0]);
    }

    #[test]
    fn zero_duration_trace() {
        let g = path(3);
        let tr = simulate_ct(&Embedding::adiabatic(&g), 1, 0.0, 4, Record::All);
        assert_eq!(tr.events, vec![(0.0, 1)]);
    }

    #[test]
    fn trace_is_reproducible_and_adjacent() {
        let g = path(5);
        let e = Embedding::adiabatic(&g);
        let a = simulate_ct(&e, 2, 50.0, 11, Record::All);
        assert_eq!(a, simulate_ct(&e, 2, 50.0, 11, Record::All));
        for w in a.events.windows(2) {
            assert!(w[1].0 > w[0].0);
            assert!(g.has_edge(w[0].1, w[1].1));
        }
    }

    #[test]
    fn discrete_walk_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(simulate_discrete(&path(3), 1, 0, &mut rng, 0.5).unwrap(), 1);
        assert_eq!(
            simulate_discrete(&path(1), 0, 100, &mut rng, 0.0).unwrap(),
            0
        );
        assert_eq!(
            simulate_discrete(&path(1), 0, 1, &mut rng, 1.0),
            Err(DynamicsError::Laziness)
        );
    }

    #[test]
    fn exact_occupancy_limits() {
        let g = path(4);
        let e = Embedding::adiabatic(&g);
        assert_eq!(exact_occupancy(&e, 2, 0.0).unwrap()[2], 1.0);
        let late = exact_occupancy(&e, 0, 200.0).unwrap();
        assert!(late.iter().all(|&p| (p - 0.25).abs() < 1e-6));
    }

    #[test]
    fn size_limit() {
        let g = path(EXACT_LIMIT + 1);
        assert!(matches!(
            ExactSolver::new(&Embedding::adiabatic(&g)),
            Err(DynamicsError::SizeLimit { .. })
        ));
    }

    #[test]
    fn hitting_profile_start_layer() {
        let g = path(4);
        let lg = crate::graph::layer_decompose(&g, &[0]).unwrap();
        let h = layer_hitting_profile(&lg, 0, 0.0, 10, 1);
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0]);
    }
}
