//! Sampler constructions over abstract chain sets: randomizer, padding,
//! holding regions, the Las Vegas graph and the coupled Monte Carlo graph.
//!
//! Layout of the Las Vegas graph, left to right:
//!
//! ```text
//! [left chains, reversed] [randomizer columns 0..=r] [right chains]
//! ```
//!
//! Each chain is present twice per side and the two copies are cross-linked,
//! so every node off the end layers has two neighbors in each adjacent layer.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{
    decode_pair, encode_pair, Graph, GraphError, LayeredGraph, Meta, NodeId, RegisterTriple,
};
use crate::stats::{tv_distance_vec, StatsError};
use crate::turing::{run, TMConfiguration, TMSpec, TuringError};

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("randomizer needs r >= 1")]
    ZeroBits,
    #[error("r = {0} is too large to build")]
    TooManyBits(u32),
    #[error("expected {expected} chains, got {found}")]
    WrongChainCount { expected: usize, found: usize },
    #[error("chain {0} is empty")]
    EmptyChain(usize),
    #[error("chain {index} has {len} nodes, more than T = {t}")]
    ChainTooLong { index: usize, len: usize, t: usize },
    #[error("chains must be padded to a common length first")]
    NotPadded,
    #[error("holding region of {found} nodes, expected {expected}")]
    HoldingLength { expected: usize, found: usize },
    #[error("sub-machines have {0} and {1} layers")]
    LayerMismatch(usize, usize),
    #[error("structure check failed: {0}")]
    Structure(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Turing(#[from] TuringError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One chain per r-bit seed. Chain `b` is the run on the seed whose bit `i` is `(b >> i) & 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSet {
    r: u32,
    chains: Vec<Vec<RegisterTriple>>,
    /// Number of trailing holding nodes on every chain.
    holding: usize,
}

impl ChainSet {
    pub fn new(r: u32, chains: Vec<Vec<RegisterTriple>>) -> Result<Self, BuildError> {
        if r == 0 {
            return Err(BuildError::ZeroBits);
        }
        if r > 20 {
            return Err(BuildError::TooManyBits(r));
        }
        let expected = 1usize << r;
        if chains.len() != expected {
            return Err(BuildError::WrongChainCount {
                expected,
                found: chains.len(),
            });
        }
        if let Some(i) = chains.iter().position(Vec::is_empty) {
            return Err(BuildError::EmptyChain(i));
        }
        Ok(Self {
            r,
            chains,
            holding: 0,
        })
    }

    /// Runs `spec` from each input. Registers: encoded configuration, metadata 0,
    /// and the output tape with surrounding blanks trimmed.
    pub fn from_tm(
        spec: &TMSpec,
        r: u32,
        inputs: &[TMConfiguration],
        max_steps: usize,
    ) -> Result<Self, BuildError> {
        let chains = inputs
            .iter()
            .map(|c0| {
                let out = run(spec, c0, max_steps)?;
                Ok(out.trace.iter().map(|c| tm_registers(spec, c)).collect())
            })
            .collect::<Result<Vec<_>, BuildError>>()?;
        Self::new(r, chains)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn chains(&self) -> &[Vec<RegisterTriple>] {
        &self.chains
    }

    /// Longest chain, in nodes.
    pub fn max_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn holding(&self) -> usize {
        self.holding
    }

    fn common_len(&self) -> Option<usize> {
        let l = self.chains[0].len();
        self.chains.iter().all(|c| c.len() == l).then_some(l)
    }
}

/// Registers for a TM configuration inside a chain.
pub fn tm_registers(spec: &TMSpec, c: &TMConfiguration) -> RegisterTriple {
    RegisterTriple::new(c.encode(), Meta::ZERO, output_of(spec, c))
}

/// Output tape contents without leading and trailing blanks.
pub fn output_of(spec: &TMSpec, c: &TMConfiguration) -> Vec<u8> {
    let t = &c.tapes[spec.output_tape()];
    let blank = spec.blank();
    let lo = t.iter().position(|&x| x != blank).unwrap_or(t.len());
    let hi = t.iter().rposition(|&x| x != blank).map_or(lo, |i| i + 1);
    t[lo..hi].to_vec()
}

/// Extends every chain to exactly `t` nodes by repeating its last node's registers.
pub fn pad_chains(cs: &ChainSet, t: usize) -> Result<ChainSet, BuildError> {
    let mut out = cs.clone();
    for (index, c) in out.chains.iter_mut().enumerate() {
        if c.len() > t {
            return Err(BuildError::ChainTooLong {
                index,
                len: c.len(),
                t,
            });
        }
        let last = c.last().unwrap().clone();
        c.resize(t, last);
    }
    Ok(out)
}

/// Appends `len` holding nodes that repeat each chain's final output.
pub fn add_holding(cs: &ChainSet, len: usize) -> Result<ChainSet, BuildError> {
    if cs.common_len().is_none() {
        return Err(BuildError::NotPadded);
    }
    let mut out = cs.clone();
    for c in &mut out.chains {
        let last = c.last().unwrap();
        let hold = RegisterTriple::new(last.work.clone(), last.metadata, last.output.clone());
        c.extend(std::iter::repeat_n(hold, len));
    }
    out.holding += len;
    Ok(out)
}

/// Randomizer node id for column `col` and string `s`.
#[inline]
pub fn randomizer_node(r: u32, col: u32, s: u32) -> NodeId {
    (col << (r + 1)) | s
}

/// `r+1` columns of `2^(r+1)` nodes; column `i` links to column `i+1` where the
/// strings agree or differ exactly in bit `i`.
pub fn build_randomizer(r: u32) -> Result<LayeredGraph, BuildError> {
    if r == 0 {
        return Err(BuildError::ZeroBits);
    }
    if r > 20 {
        return Err(BuildError::TooManyBits(r));
    }
    let width = 1u32 << (r + 1);
    let mut regs = Vec::with_capacity(((r + 1) * width) as usize);
    let mut layer_of = Vec::with_capacity(regs.capacity());
    for col in 0..=r {
        for s in 0..width {
            regs.push(randomizer_registers(col, s));
            layer_of.push(col);
        }
    }
    let mut edges = Vec::with_capacity((2 * r * width) as usize);
    for col in 0..r {
        for s in 0..width {
            let u = randomizer_node(r, col, s);
            edges.push((u, randomizer_node(r, col + 1, s)));
            edges.push((u, randomizer_node(r, col + 1, s ^ (1 << col))));
        }
    }
    let g = Graph::new(regs, edges)?;
    Ok(LayeredGraph::from_assignment(g, layer_of)?)
}

fn randomizer_registers(col: u32, s: u32) -> RegisterTriple {
    let mut work = vec![b'R'];
    work.extend_from_slice(&col.to_le_bytes());
    work.extend_from_slice(&s.to_le_bytes());
    RegisterTriple::new(work, Meta::ZERO, Vec::new())
}

/// Unbiased discrete walks from column 0, string 0, until column `r` is hit;
/// returns the TV distance of the first `r` bits from uniform.
pub fn randomizer_uniformity_check(r: u32, walks: usize, seed: u64) -> Result<f64, BuildError> {
    if walks == 0 {
        return Err(StatsError::EmptySample.into());
    }
    let rz = build_randomizer(r)?;
    let g = rz.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = (1u32 << r) - 1;
    let mut counts = vec![0.0; 1 << r];
    for _ in 0..walks {
        let mut v = randomizer_node(r, 0, 0);
        while rz.layer_of(v) < r as usize {
            let nb = g.neighbors(v);
            v = nb[rng.random_range(0..nb.len())];
        }
        counts[(v & mask) as usize] += 1.0;
    }
    let uniform = vec![1.0; 1 << r];
    Ok(tv_distance_vec(&counts, &uniform)?)
}

/// A built sampler graph with its geometry.
#[derive(Debug, Clone)]
pub struct SamplerGraph {
    pub layered: LayeredGraph,
    pub r: u32,
    /// Chain length before holding nodes.
    pub t: usize,
    /// Holding nodes per chain.
    pub holding: usize,
    /// Layers occupied by the randomizer.
    pub randomizer_layers: Range<usize>,
}

impl SamplerGraph {
    pub fn graph(&self) -> &Graph {
        self.layered.graph()
    }

    pub fn layer_count(&self) -> usize {
        self.layered.layer_count()
    }
}

/// Where a chain copy hangs off the randomizer.
#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

struct Assembly {
    regs: Vec<RegisterTriple>,
    layer_of: Vec<u32>,
    edges: Vec<(NodeId, NodeId)>,
}

impl Assembly {
    fn from_randomizer(rz: &LayeredGraph, offset: u32) -> Self {
        let g = rz.graph();
        let regs = g.registers().to_vec();
        let layer_of = (0..g.node_count() as NodeId)
            .map(|n| rz.layer_of(n) as u32 + offset)
            .collect();
        let edges = g.edges().to_vec();
        Self {
            regs,
            layer_of,
            edges,
        }
    }

    /// Adds the two cross-linked copies of `chain`, attached to `anchors`.
    /// Node `t` of a copy sits at layer `base + t` (right) or `base - t` (left).
    #[allow(clippy::too_many_arguments)]
    fn attach_pair(
        &mut self,
        chain: &[RegisterTriple],
        holding_from: usize,
        holding_meta: Meta,
        anchors: [NodeId; 2],
        side: Side,
        base: u32,
        tag: u8,
    ) {
        let mut ids = [
            Vec::with_capacity(chain.len()),
            Vec::with_capacity(chain.len()),
        ];
        for (copy, list) in ids.iter_mut().enumerate() {
            for (t, reg) in chain.iter().enumerate() {
                let id = self.regs.len() as NodeId;
                let mut reg = reg.clone();
                reg.work.extend_from_slice(&[tag, copy as u8]);
                if t >= holding_from {
                    reg.metadata = holding_meta;
                }
                self.regs.push(reg);
                self.layer_of.push(match side {
                    Side::Right => base + t as u32,
                    Side::Left => base - t as u32,
                });
                list.push(id);
            }
        }
        for a in anchors {
            self.edges.push((a, ids[0][0]));
            self.edges.push((a, ids[1][0]));
        }
        for t in 0..chain.len() - 1 {
            for x in 0..2 {
                self.edges.push((ids[x][t], ids[x][t + 1]));
                self.edges.push((ids[x][t], ids[1 - x][t + 1]));
            }
        }
    }

    fn finish(self) -> Result<LayeredGraph, BuildError> {
        let g = Graph::new(self.regs, self.edges)?;
        let lg = LayeredGraph::from_assignment(g, self.layer_of)?;
        if !lg.internal_regular(2) {
            return Err(BuildError::Structure(
                "internal nodes are not 2/2 regular".into(),
            ));
        }
        Ok(lg)
    }
}

/// Checks that `cs` has been padded to `t` nodes and then given `holding` holding nodes.
fn check_prepared(cs: &ChainSet, holding: usize) -> Result<usize, BuildError> {
    let len = cs.common_len().ok_or(BuildError::NotPadded)?;
    if cs.holding != holding {
        return Err(BuildError::HoldingLength {
            expected: holding,
            found: cs.holding,
        });
    }
    Ok(len - holding)
}

/// Las Vegas holding length for chain length `t`.
pub fn lv_holding_len(t: usize, r: u32) -> usize {
    2 * t + r as usize + 1
}

/// Monte Carlo holding length for chain length `t`.
pub fn mc_holding_len(t: usize, r: u32) -> usize {
    t + r as usize + 1
}

/// Pads, adds LV holding regions and assembles.
pub fn build_las_vegas(cs: &ChainSet) -> Result<SamplerGraph, BuildError> {
    let t = cs.max_len();
    let prepared = add_holding(&pad_chains(cs, t)?, lv_holding_len(t, cs.r))?;
    let rz = build_randomizer(cs.r)?;
    assemble_las_vegas(&rz, &prepared)
}

/// Joins the randomizer with two copies of each chain on each side.
/// Holding nodes get metadata -1 on the left and +1 on the right.
pub fn assemble_las_vegas(rz: &LayeredGraph, cs: &ChainSet) -> Result<SamplerGraph, BuildError> {
    let r = cs.r;
    let t = check_prepared(cs, lv_holding_len(cs.max_len() - cs.holding, r))?;
    let full = t + cs.holding;
    if rz.layer_count() != r as usize + 1 {
        return Err(BuildError::Structure("randomizer does not match r".into()));
    }
    let left_base = full as u32 - 1;
    let mut asm = Assembly::from_randomizer(rz, full as u32);
    let bit_r = 1u32 << r;
    for (b, chain) in cs.chains.iter().enumerate() {
        let b = b as u32;
        let left = [randomizer_node(r, 0, b), randomizer_node(r, 0, b | bit_r)];
        let right = [randomizer_node(r, r, b), randomizer_node(r, r, b | bit_r)];
        asm.attach_pair(chain, t, Meta::NEG, left, Side::Left, left_base, b'L');
        asm.attach_pair(
            chain,
            t,
            Meta::POS,
            right,
            Side::Right,
            full as u32 + r + 1,
            b'R',
        );
    }
    let layered = asm.finish()?;
    Ok(SamplerGraph {
        layered,
        r,
        t,
        holding: cs.holding,
        randomizer_layers: full..full + r as usize + 1,
    })
}

/// Pads, adds MC holding regions and assembles one sub-machine.
pub fn build_mc_submachine(cs: &ChainSet) -> Result<SamplerGraph, BuildError> {
    let t = cs.max_len();
    let prepared = add_holding(&pad_chains(cs, t)?, mc_holding_len(t, cs.r))?;
    let rz = build_randomizer(cs.r)?;
    assemble_mc_submachine(&rz, &prepared)
}

/// Randomizer with two copies of each chain on the right only; holding metadata +1.
pub fn assemble_mc_submachine(
    rz: &LayeredGraph,
    cs: &ChainSet,
) -> Result<SamplerGraph, BuildError> {
    let r = cs.r;
    let t = check_prepared(cs, mc_holding_len(cs.max_len() - cs.holding, r))?;
    if t == 0 {
        return Err(BuildError::Structure(
            "chains must have at least one node".into(),
        ));
    }
    let mut asm = Assembly::from_randomizer(rz, 0);
    let bit_r = 1u32 << r;
    for (b, chain) in cs.chains.iter().enumerate() {
        let b = b as u32;
        let right = [randomizer_node(r, r, b), randomizer_node(r, r, b | bit_r)];
        asm.attach_pair(chain, t, Meta::POS, right, Side::Right, r + 1, b'R');
    }
    let layered = asm.finish()?;
    Ok(SamplerGraph {
        layered,
        r,
        t,
        holding: cs.holding,
        randomizer_layers: 0..r as usize + 1,
    })
}

/// The coupled Monte Carlo graph. Node `v` pairs `components[v].0` (layer `i` of
/// the +1 machine) with `components[v].1` (layer `L-1-i` of the -1 machine).
#[derive(Debug, Clone)]
pub struct McGraph {
    pub layered: LayeredGraph,
    pub components: Vec<(NodeId, NodeId)>,
    /// Layer count of each sub-machine.
    pub sub_layers: usize,
}

impl McGraph {
    pub fn graph(&self) -> &Graph {
        self.layered.graph()
    }

    /// Rebuilds the sampling view of a coupled graph, e.g. one read back from a
    /// dump. Component ids are not recoverable and are left empty.
    pub fn from_layered(layered: LayeredGraph) -> Result<Self, BuildError> {
        let g = layered.graph();
        for v in 0..g.node_count() as NodeId {
            let reg = g.register(v);
            if reg.metadata == Meta::ZERO || decode_pair(&reg.output).is_none() {
                return Err(BuildError::Structure(format!("node {v} holds no sample")));
            }
        }
        let sub_layers = layered.layer_count();
        Ok(Self {
            layered,
            components: Vec::new(),
            sub_layers,
        })
    }

    /// Output of whichever sub-machine is in its holding region.
    pub fn sample_output(&self, node: NodeId) -> Option<&[u8]> {
        let reg = self.layered.graph().register(node);
        let (o1, o_neg) = decode_pair(&reg.output)?;
        match reg.metadata.get() {
            1 => Some(o1),
            -1 => Some(o_neg),
            _ => None,
        }
    }
}

/// Product of two sub-machines stepping in opposite directions.
pub fn couple_mc(m1: &LayeredGraph, m_neg1: &LayeredGraph) -> Result<McGraph, BuildError> {
    let l = m1.layer_count();
    if l != m_neg1.layer_count() {
        return Err(BuildError::LayerMismatch(l, m_neg1.layer_count()));
    }
    let mut index: Vec<Vec<NodeId>> = Vec::with_capacity(l);
    let mut components = Vec::new();
    let mut regs = Vec::new();
    let mut layer_of = Vec::new();
    for i in 0..l {
        let a = &m1.layers()[i];
        let b = &m_neg1.layers()[l - 1 - i];
        let mut row = Vec::with_capacity(a.len() * b.len());
        for &u in a {
            for &v in b {
                let (ru, rv) = (m1.graph().register(u), m_neg1.graph().register(v));
                let meta = ru.metadata.get() as i64 + rv.metadata.get() as i64;
                if meta == 0 {
                    return Err(BuildError::Structure(format!(
                        "product of {u} and {v} has metadata 0"
                    )));
                }
                let id = components.len() as NodeId;
                components.push((u, v));
                regs.push(RegisterTriple::new(
                    encode_pair(&ru.work, &rv.work),
                    Meta::new(meta)?,
                    encode_pair(&ru.output, &rv.output),
                ));
                layer_of.push(i as u32);
                row.push(id);
            }
        }
        index.push(row);
    }
    let mut edges = Vec::new();
    for i in 0..l.saturating_sub(1) {
        let j = l - 1 - i;
        let b_layer = &m_neg1.layers()[j];
        let b_next = &m_neg1.layers()[j - 1];
        let width = b_layer.len();
        let pos_in =
            |layer: &[NodeId], v: NodeId| layer.binary_search(&v).expect("layer lists are sorted");
        for (x, &u) in m1.layers()[i].iter().enumerate() {
            for &u2 in m1.graph().neighbors(u) {
                if m1.layer_of(u2) != i + 1 {
                    continue;
                }
                let x2 = pos_in(&m1.layers()[i + 1], u2);
                for (y, &v) in b_layer.iter().enumerate() {
                    for &v2 in m_neg1.graph().neighbors(v) {
                        if m_neg1.layer_of(v2) + 1 != j {
                            continue;
                        }
                        let y2 = pos_in(b_next, v2);
                        edges.push((
                            index[i][x * width + y],
                            index[i + 1][x2 * b_next.len() + y2],
                        ));
                    }
                }
            }
        }
    }
    let g = Graph::new(regs, edges)?;
    let layered = LayeredGraph::from_assignment(g, layer_of)?;
    Ok(McGraph {
        layered,
        components,
        sub_layers: l,
    })
}

/// Builds both sub-machines from `cs` and couples them.
pub fn build_monte_carlo(cs: &ChainSet) -> Result<McGraph, BuildError> {
    let sub = build_mc_submachine(cs)?;
    let neg = sub.layered.map_metadata(Meta::neg);
    couple_mc(&sub.layered, &neg)
}
