//! Observer protocols and efficiency estimates.
//!
//! Measurements are instantaneous reads of the metadata and output registers;
//! they never touch the walker, so the trajectory is the same whatever the
//! measurement schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::builder::McGraph;
use crate::dynamics::{DynamicsError, Embedding, ExactSolver, Walker};
use crate::graph::{Graph, LayeredGraph, Meta, NodeId, RegisterTriple};
use crate::trials::run_trials;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObserverError {
    #[error("measurement budget of {measurements} spent with {accepted} samples accepted")]
    MeasurementBudgetExhausted { accepted: usize, measurements: u64 },
    #[error("wait must be positive")]
    BadWait,
    #[error("target {target} is not below the equilibrium bound {bound}")]
    Unachievable { target: f64, bound: f64 },
    #[error("graph is not regular between layers")]
    NotRegular,
    #[error("layer {0} mixes metadata values")]
    MixedLayer(usize),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// One measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub sim_time: f64,
    /// Las Vegas: the metadata read (-1, 0, 1). Monte Carlo: the selector bit (0 for -1, 1 for +1).
    pub metadata: i8,
    pub value: Vec<u8>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Time between measurements.
    pub wait: f64,
    pub max_measurements: u64,
}

impl ProtocolParams {
    pub fn new(wait: f64, max_measurements: u64) -> Result<Self, ObserverError> {
        if !(wait > 0.0 && wait.is_finite()) {
            return Err(ObserverError::BadWait);
        }
        Ok(Self {
            wait,
            max_measurements,
        })
    }
}

/// What the Las Vegas observer does with one metadata reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Still looking for the first nonzero reading.
    Searching,
    /// First nonzero reading; fixes `m_prev` but yields no sample.
    Armed,
    Accept,
    Reject,
}

/// The Las Vegas decision rule on its own.
#[derive(Debug, Clone, Default)]
pub struct LvObserver {
    m_prev: i8,
    attempts: u64,
}

impl LvObserver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn m_prev(&self) -> i8 {
        self.m_prev
    }

    /// Feeds one reading. On `Accept`, returns the number of post-arming
    /// measurements it took, this one included.
    pub fn observe(&mut self, m: i8) -> (Verdict, Option<u64>) {
        if self.m_prev == 0 {
            if m == 0 {
                return (Verdict::Searching, None);
            }
            self.m_prev = m;
            return (Verdict::Armed, None);
        }
        self.attempts += 1;
        if m == -self.m_prev {
            self.m_prev = m;
            let a = std::mem::take(&mut self.attempts);
            (Verdict::Accept, Some(a))
        } else {
            (Verdict::Reject, None)
        }
    }
}

#[derive(Debug, Clone)]
pub struct LvRun {
    /// Every measurement, accepted or not.
    pub records: Vec<SampleRecord>,
    /// Measurements needed for each accepted sample.
    pub attempts: Vec<u64>,
    pub bits_read: u64,
}

impl LvRun {
    pub fn accepted(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| r.accepted)
    }
}

/// Runs the Las Vegas procedure until `samples` are accepted.
pub fn lv_protocol(
    g: &Graph,
    start: NodeId,
    params: &ProtocolParams,
    samples: usize,
    seed: u64,
) -> Result<LvRun, ObserverError> {
    lv_protocol_with(g, start, params, samples, ChaCha8Rng::seed_from_u64(seed))
}

/// [`lv_protocol`] with a caller-provided generator.
pub fn lv_protocol_with(
    g: &Graph,
    start: NodeId,
    params: &ProtocolParams,
    samples: usize,
    rng: ChaCha8Rng,
) -> Result<LvRun, ObserverError> {
    let e = Embedding::adiabatic(g);
    let mut walker = Walker::new(&e, start, rng);
    let mut obs = LvObserver::new();
    let mut run = LvRun {
        records: Vec::new(),
        attempts: Vec::new(),
        bits_read: 0,
    };
    let mut k = 0u64;
    while run.attempts.len() < samples {
        if k >= params.max_measurements {
            return Err(ObserverError::MeasurementBudgetExhausted {
                accepted: run.attempts.len(),
                measurements: k,
            });
        }
        k += 1;
        let t = k as f64 * params.wait;
        let reg: &RegisterTriple = g.register(walker.advance_to(&e, t));
        let m = reg.metadata.get();
        run.bits_read += 2;
        let (verdict, attempts) = obs.observe(m);
        let accepted = verdict == Verdict::Accept;
        let value = if accepted {
            run.bits_read += 8 * reg.output.len() as u64;
            run.attempts.push(attempts.unwrap());
            reg.output.clone()
        } else {
            Vec::new()
        };
        run.records.push(SampleRecord {
            index: k - 1,
            sim_time: t,
            metadata: m,
            value,
            accepted,
        });
    }
    Ok(run)
}

/// Monte Carlo procedure: `count` measurements, each one a sample.
pub fn mc_protocol(
    mc: &McGraph,
    start: NodeId,
    wait: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SampleRecord>, ObserverError> {
    if !(wait > 0.0 && wait.is_finite()) {
        return Err(ObserverError::BadWait);
    }
    let g = mc.graph();
    let e = Embedding::adiabatic(g);
    let mut walker = Walker::new(&e, start, ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let t = (k + 1) as f64 * wait;
        let v = walker.advance_to(&e, t);
        let m = g.register(v).metadata;
        let bit = i8::from(m == Meta::POS);
        let value = mc
            .sample_output(v)
            .expect("coupled nodes always hold a sample")
            .to_vec();
        out.push(SampleRecord {
            index: k,
            sim_time: t,
            metadata: bit,
            value,
            accepted: true,
        });
    }
    Ok(out)
}

/// Worst-case (over start layers) probabilities of reading -1 and +1 after a wait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub p_minus: f64,
    pub p_plus: f64,
}

impl Efficiency {
    pub fn min(&self) -> f64 {
        self.p_minus.min(self.p_plus)
    }
}

/// Monte Carlo estimate: `trials` walks from the first node of every layer.
pub fn estimate_lv_efficiency(
    lg: &LayeredGraph,
    wait: f64,
    trials: usize,
    seed: u64,
) -> Efficiency {
    let g = lg.graph();
    let e = Embedding::adiabatic(g);
    let l = lg.layer_count();
    let reads = run_trials(l * trials, seed, |i, rng| {
        let start = lg.layers()[i / trials][0];
        let mut w = Walker::new(&e, start, rng.clone());
        g.register(w.advance_to(&e, wait)).metadata.get()
    });
    let (mut p_minus, mut p_plus) = (1.0f64, 1.0f64);
    for chunk in reads.chunks(trials) {
        let n = chunk.len() as f64;
        p_minus = p_minus.min(chunk.iter().filter(|&&m| m == -1).count() as f64 / n);
        p_plus = p_plus.min(chunk.iter().filter(|&&m| m == 1).count() as f64 / n);
    }
    Efficiency { p_minus, p_plus }
}

/// Exact layer-index dynamics of a graph that is `k`/`k` regular between layers.
///
/// All nodes of a layer are exchangeable for the layer process, which is a
/// walk on a path whose edges fire at rate `k` in each direction.
#[derive(Debug, Clone)]
pub struct LayerProcess {
    layer_meta: Vec<i8>,
    rate: f64,
    solver: ExactSolver,
}

impl LayerProcess {
    pub fn new(lg: &LayeredGraph) -> Result<Self, ObserverError> {
        let l = lg.layer_count();
        let k = if l < 2 {
            1
        } else {
            lg.side_degrees(lg.layers()[0][0]).1
        };
        if l >= 2 && (k == 0 || !lg.internal_regular(k)) {
            return Err(ObserverError::NotRegular);
        }
        let mut layer_meta = Vec::with_capacity(l);
        for (i, layer) in lg.layers().iter().enumerate() {
            let m = lg.graph().register(layer[0]).metadata;
            if layer.iter().any(|&v| lg.graph().register(v).metadata != m) {
                return Err(ObserverError::MixedLayer(i));
            }
            layer_meta.push(m.get());
        }
        let path = path_graph(l);
        let solver = ExactSolver::new(&Embedding::adiabatic(&path).with_rate(k as f64))?;
        Ok(Self {
            layer_meta,
            rate: k as f64,
            solver,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.layer_meta.len()
    }

    /// Layer distribution after `t` from `start_layer`.
    pub fn distribution(&self, start_layer: usize, t: f64) -> Vec<f64> {
        self.solver.occupancy(start_layer as NodeId, t)
    }

    fn mass(&self, p: &[f64], m: i8) -> f64 {
        p.iter()
            .zip(&self.layer_meta)
            .filter(|(_, &x)| x == m)
            .map(|(p, _)| p)
            .sum()
    }

    /// Exact worst-case efficiency after `wait`.
    pub fn efficiency(&self, wait: f64) -> Efficiency {
        let (mut p_minus, mut p_plus) = (1.0f64, 1.0f64);
        for s in 0..self.layer_count() {
            let p = self.distribution(s, wait);
            p_minus = p_minus.min(self.mass(&p, -1));
            p_plus = p_plus.min(self.mass(&p, 1));
        }
        Efficiency { p_minus, p_plus }
    }

    /// Equilibrium masses of the -1 and +1 regions.
    pub fn stationary(&self) -> Efficiency {
        let u = vec![1.0 / self.layer_count() as f64; self.layer_count()];
        Efficiency {
            p_minus: self.mass(&u, -1),
            p_plus: self.mass(&u, 1),
        }
    }

    /// Largest TV distance of the layer distribution from equilibrium over start layers.
    pub fn mixing_distance(&self, wait: f64) -> f64 {
        let l = self.layer_count() as f64;
        (0..self.layer_count())
            .map(|s| {
                0.5 * self
                    .distribution(s, wait)
                    .iter()
                    .map(|p| (p - 1.0 / l).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

impl LayerProcess {
    /// Probability that a walk started in layer 0 has reached the last layer by `t`.
    pub fn crossing_probability(&self, t: f64) -> Result<f64, ObserverError> {
        Ok(Crossing::new(self)?.probability(t))
    }
}

/// By reflection about the last layer, the probability of having reached it
/// is `P(Y = L-1) + 2 P(Y > L-1)` for the same walk `Y` on `2L - 1` layers.
struct Crossing {
    layers: usize,
    solver: Option<ExactSolver>,
}

impl Crossing {
    fn new(lp: &LayerProcess) -> Result<Self, ObserverError> {
        let l = lp.layer_count();
        let solver = if l < 2 {
            None
        } else {
            Some(ExactSolver::new(
                &Embedding::adiabatic(&path_graph(2 * l - 1)).with_rate(lp.rate),
            )?)
        };
        Ok(Self { layers: l, solver })
    }

    fn probability(&self, t: f64) -> f64 {
        let Some(solver) = &self.solver else {
            return 1.0;
        };
        let l = self.layers;
        let p = solver.occupancy(0, t);
        (p[l - 1] + 2.0 * p[l..].iter().sum::<f64>()).min(1.0)
    }
}

fn path_graph(n: usize) -> Graph {
    let regs = vec![RegisterTriple::default(); n];
    Graph::new(regs, (1..n as NodeId).map(|i| (i - 1, i)).collect()).expect("path edges are valid")
}

/// Grid used by the calibrations: `0.5 * 1.1^i`.
fn wait_grid() -> impl Iterator<Item = f64> {
    (0..400).map(|i| 0.5 * 1.1f64.powi(i))
}

/// Smallest grid wait whose exact worst-case efficiency reaches `target`.
pub fn calibrate_wait(lg: &LayeredGraph, target: f64) -> Result<f64, ObserverError> {
    let lp = LayerProcess::new(lg)?;
    let bound = lp.stationary().min();
    if target >= bound {
        return Err(ObserverError::Unachievable { target, bound });
    }
    wait_grid()
        .find(|&w| lp.efficiency(w).min() >= target)
        .ok_or(ObserverError::Unachievable { target, bound })
}

/// Smallest grid wait after which the layer distribution is within `eps` of
/// equilibrium from every start layer.
pub fn calibrate_mixing(lg: &LayeredGraph, eps: f64) -> Result<f64, ObserverError> {
    let lp = LayerProcess::new(lg)?;
    if eps <= 0.0 {
        return Err(ObserverError::Unachievable {
            target: eps,
            bound: 0.0,
        });
    }
    wait_grid()
        .find(|&w| lp.mixing_distance(w) <= eps)
        .ok_or(ObserverError::Unachievable {
            target: eps,
            bound: 0.0,
        })
}

/// Smallest grid wait after which a walk started at one end has reached the
/// other end with probability at least `1 - eps`. Every seed has then been
/// redrawn with that probability, which is what the Monte Carlo wait needs.
pub fn calibrate_hitting(lg: &LayeredGraph, eps: f64) -> Result<f64, ObserverError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ObserverError::Unachievable {
            target: eps,
            bound: 0.0,
        });
    }
    let crossing = Crossing::new(&LayerProcess::new(lg)?)?;
    wait_grid()
        .find(|&w| crossing.probability(w) >= 1.0 - eps)
        .ok_or(ObserverError::Unachievable {
            target: eps,
            bound: 0.0,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(ms: &[i8]) -> Vec<Verdict> {
        let mut o = LvObserver::new();
        ms.iter().map(|&m| o.observe(m).0).collect()
    }

    #[test]
    fn first_flip_is_accepted() {
        use Verdict::*;
        let mut o = LvObserver::new();
        assert_eq!(
            feed(&[0, 0, 1, -1]),
            vec![Searching, Searching, Armed, Accept]
        );
        for m in [0, 0, 1] {
            o.observe(m);
        }
        assert_eq!(o.observe(-1), (Accept, Some(1)));
        assert_eq!(o.m_prev(), -1);
    }

    #[test]
    fn constant_metadata_never_accepts() {
        assert!(feed(&[1; 20]).iter().all(|v| *v != Verdict::Accept));
    }

    #[test]
    fn attempts_count_rejections() {
        let mut o = LvObserver::new();
        o.observe(-1);
        assert_eq!(o.observe(0).0, Verdict::Reject);
        assert_eq!(o.observe(-1).0, Verdict::Reject);
        assert_eq!(o.observe(1), (Verdict::Accept, Some(3)));
    }

    #[test]
    fn params_validate_wait() {
        assert_eq!(ProtocolParams::new(0.0, 1), Err(ObserverError::BadWait));
        assert!(ProtocolParams::new(1.0, 1).is_ok());
    }
}
