//! General machines, their undirected embeddings and layered graphs.
//!
//! Node ids are dense `u32` indices. Registers live in a side table indexed by
//! node id; the graph types never interpret the work or output bytes.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("metadata value {0} is not one of -1, 0, 1")]
    BadMetadata(i64),
    #[error("successor {succ} of node {node} is not a configuration")]
    DanglingSuccessor { node: NodeId, succ: NodeId },
    #[error("edge {0}-{1} references a missing node")]
    DanglingEdge(NodeId, NodeId),
    #[error("edge {u}-{v} joins layers {lu} and {lv}")]
    NotLayered {
        u: NodeId,
        v: NodeId,
        lu: usize,
        lv: usize,
    },
    #[error("node {0} is not reachable from the roots")]
    Disconnected(NodeId),
    #[error("no roots given")]
    NoRoots,
    #[error("dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// Metadata register value, always in {-1, 0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Meta(i8);

impl Meta {
    pub const NEG: Meta = Meta(-1);
    pub const ZERO: Meta = Meta(0);
    pub const POS: Meta = Meta(1);

    pub fn new(v: i64) -> Result<Self, GraphError> {
        match v {
            -1..=1 => Ok(Meta(v as i8)),
            _ => Err(GraphError::BadMetadata(v)),
        }
    }

    pub fn get(self) -> i8 {
        self.0
    }

    pub fn neg(self) -> Meta {
        Meta(-self.0)
    }
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The `(work, metadata, output)` registers of one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RegisterTriple {
    pub work: Vec<u8>,
    pub metadata: Meta,
    pub output: Vec<u8>,
}

impl RegisterTriple {
    pub fn new(work: Vec<u8>, metadata: Meta, output: Vec<u8>) -> Self {
        Self {
            work,
            metadata,
            output,
        }
    }
}

/// Packs two output registers into one opaque byte string (length-prefixed).
pub fn encode_pair(first: &[u8], second: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + first.len() + second.len());
    out.extend_from_slice(&(first.len() as u32).to_le_bytes());
    out.extend_from_slice(first);
    out.extend_from_slice(second);
    out
}

/// Inverse of [`encode_pair`]. Returns `None` on malformed input.
pub fn decode_pair(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let rest = &bytes[4..];
    if len > rest.len() {
        return None;
    }
    Some(rest.split_at(len))
}

/// A finite configuration space with a transition function.
#[derive(Debug, Clone)]
pub struct GeneralMachine {
    registers: Vec<RegisterTriple>,
    successors: Vec<Vec<NodeId>>,
}

impl GeneralMachine {
    pub fn new(
        registers: Vec<RegisterTriple>,
        successors: Vec<Vec<NodeId>>,
    ) -> Result<Self, GraphError> {
        assert_eq!(
            registers.len(),
            successors.len(),
            "one successor set per configuration"
        );
        let n = registers.len() as u64;
        for (node, succ) in successors.iter().enumerate() {
            if let Some(&s) = succ.iter().find(|&&s| s as u64 >= n) {
                return Err(GraphError::DanglingSuccessor {
                    node: node as NodeId,
                    succ: s,
                });
            }
        }
        let successors = successors
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(Self {
            registers,
            successors,
        })
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn registers(&self) -> &[RegisterTriple] {
        &self.registers
    }

    pub fn successors(&self, node: NodeId) -> &[NodeId] {
        &self.successors[node as usize]
    }

    pub fn is_deterministic(&self) -> bool {
        self.successors.iter().all(|s| s.len() <= 1)
    }

    pub fn is_reversible(&self) -> bool {
        if !self.is_deterministic() {
            return false;
        }
        let mut seen = vec![false; self.len()];
        for s in self.successors.iter().flatten() {
            if std::mem::replace(&mut seen[*s as usize], true) {
                return false;
            }
        }
        true
    }

    pub fn terminal_configs(&self) -> Vec<NodeId> {
        (0..self.len() as NodeId)
            .filter(|&n| self.successors[n as usize].is_empty())
            .collect()
    }

    /// The machine with every transition reversed.
    pub fn reverse(&self) -> GeneralMachine {
        let mut rev = vec![Vec::new(); self.len()];
        for (u, succ) in self.successors.iter().enumerate() {
            for &w in succ {
                rev[w as usize].push(u as NodeId);
            }
        }
        GeneralMachine::new(self.registers.clone(), rev).expect("reversed ids are in range")
    }

    /// Undirected embedding: `{U, W}` is an edge iff `W ∈ f(U)` or `U ∈ f(W)`.
    pub fn embed(&self) -> Graph {
        let edges = self
            .successors
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.iter().map(move |&w| (u as NodeId, w)))
            .collect();
        Graph::new(self.registers.clone(), edges).expect("successor ids already validated")
    }
}

/// Undirected simple graph with registers in a side table.
///
/// Edges are stored once as `(min, max)`; self-loops are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    registers: Vec<RegisterTriple>,
    edges: Vec<(NodeId, NodeId)>,
    offsets: Vec<u32>,
    neighbors: Vec<NodeId>,
}

impl Graph {
    pub fn new(
        registers: Vec<RegisterTriple>,
        edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let n = registers.len();
        let mut canon: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::DanglingEdge(u, v));
            }
            if u != v {
                canon.push((u.min(v), u.max(v)));
            }
        }
        canon.sort_unstable();
        canon.dedup();

        let mut degree = vec![0u32; n + 1];
        for &(u, v) in &canon {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0; offsets[n] as usize];
        for &(u, v) in &canon {
            neighbors[fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
        }
        Ok(Self {
            registers,
            edges: canon,
            offsets,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.registers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn registers(&self) -> &[RegisterTriple] {
        &self.registers
    }

    pub fn register(&self, node: NodeId) -> &RegisterTriple {
        &self.registers[node as usize]
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        let lo = self.offsets[node as usize] as usize;
        let hi = self.offsets[node as usize + 1] as usize;
        &self.neighbors[lo..hi]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        (self.offsets[node as usize + 1] - self.offsets[node as usize]) as usize
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Breadth-first distances from `roots`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, roots: &[NodeId]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        for &r in roots {
            if dist[r as usize].is_none() {
                dist[r as usize] = Some(0);
                queue.push_back(r);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize].unwrap();
            for &w in self.neighbors(u) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Largest shortest-path distance between any two nodes (connected graphs).
    pub fn diameter(&self) -> usize {
        (0..self.node_count() as NodeId)
            .map(|s| {
                self.bfs_distances(&[s])
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}

/// A graph together with a partition of its nodes into consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredGraph {
    graph: Graph,
    layers: Vec<Vec<NodeId>>,
    layer_of: Vec<u32>,
}

impl LayeredGraph {
    /// Uses a known layer assignment instead of BFS; still checks that edges join consecutive layers.
    pub fn from_assignment(graph: Graph, layer_of: Vec<u32>) -> Result<Self, GraphError> {
        assert_eq!(graph.node_count(), layer_of.len());
        let count = layer_of.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut layers = vec![Vec::new(); count];
        for (n, &l) in layer_of.iter().enumerate() {
            layers[l as usize].push(n as NodeId);
        }
        let lg = LayeredGraph {
            graph,
            layers,
            layer_of,
        };
        lg.check_consecutive()?;
        Ok(lg)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    /// Same structure with every metadata register passed through `f`.
    pub fn map_metadata(&self, f: impl Fn(Meta) -> Meta) -> LayeredGraph {
        let mut out = self.clone();
        for r in &mut out.graph.registers {
            r.metadata = f(r.metadata);
        }
        out
    }

    pub fn layers(&self) -> &[Vec<NodeId>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn layer_of(&self, node: NodeId) -> usize {
        self.layer_of[node as usize] as usize
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Neighbor counts of `node` in the previous and next layer.
    pub fn side_degrees(&self, node: NodeId) -> (usize, usize) {
        let l = self.layer_of(node);
        self.graph
            .neighbors(node)
            .iter()
            .fold((0, 0), |(back, fwd), &w| {
                if self.layer_of(w) < l {
                    (back + 1, fwd)
                } else {
                    (back, fwd + 1)
                }
            })
    }

    /// Every node off the two extreme layers has exactly `k` neighbors on each side.
    pub fn internal_regular(&self, k: usize) -> bool {
        let last = self.layer_count().saturating_sub(1);
        self.layers.iter().enumerate().all(|(i, layer)| {
            layer.iter().all(|&n| {
                let (b, f) = self.side_degrees(n);
                let want_b = if i == 0 { 0 } else { k };
                let want_f = if i == last { 0 } else { k };
                b == want_b && f == want_f
            })
        })
    }

    /// Renders the line-oriented debug dump (`node`/`edge` lines).
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        for node in 0..self.graph.node_count() as NodeId {
            let reg = self.graph.register(node);
            let out = if reg.output.is_empty() {
                "-".to_string()
            } else {
                hex(&reg.output)
            };
            writeln!(
                s,
                "node {} {} {} {}",
                node,
                self.layer_of(node),
                reg.metadata,
                out
            )
            .unwrap();
        }
        for &(u, v) in self.graph.edges() {
            writeln!(s, "edge {u} {v}").unwrap();
        }
        s
    }

    /// Parses a dump written by [`LayeredGraph::to_dump`]. The output field is optional.
    pub fn from_dump(text: &str) -> Result<Self, GraphError> {
        let mut nodes: Vec<(usize, RegisterTriple)> = Vec::new();
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: &str| GraphError::Dump {
                line: line_no,
                msg: msg.to_string(),
            };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| err(&format!("bad integer `{s}`")))
            };
            match f[0] {
                "node" if f.len() == 4 || f.len() == 5 => {
                    let id = num(f[1])?;
                    if id != nodes.len() as i64 {
                        return Err(err("node ids must be dense and ascending"));
                    }
                    let layer = num(f[2])?;
                    let meta = Meta::new(num(f[3])?).map_err(|e| err(&e.to_string()))?;
                    let output = match f.get(4) {
                        None | Some(&"-") => Vec::new(),
                        Some(h) => unhex(h).ok_or_else(|| err("bad hex output"))?,
                    };
                    if layer < 0 {
                        return Err(err("negative layer"));
                    }
                    nodes.push((
                        layer as usize,
                        RegisterTriple::new(Vec::new(), meta, output),
                    ));
                }
                "edge" if f.len() == 3 => {
                    let (u, v) = (num(f[1])?, num(f[2])?);
                    if u < 0 || v < 0 {
                        return Err(err("negative node id"));
                    }
                    edges.push((u as NodeId, v as NodeId));
                }
                _ => {
                    return Err(err(
                        "expected `node <id> <layer> <meta> [out]` or `edge <u> <v>`",
                    ))
                }
            }
        }
        let layer_count = nodes.iter().map(|(l, _)| l + 1).max().unwrap_or(0);
        let mut layers = vec![Vec::new(); layer_count];
        let mut layer_of = Vec::with_capacity(nodes.len());
        let mut registers = Vec::with_capacity(nodes.len());
        for (id, (layer, reg)) in nodes.into_iter().enumerate() {
            layers[layer].push(id as NodeId);
            layer_of.push(layer as u32);
            registers.push(reg);
        }
        let graph = Graph::new(registers, edges)?;
        let lg = LayeredGraph {
            graph,
            layers,
            layer_of,
        };
        lg.check_consecutive()?;
        Ok(lg)
    }

    fn check_consecutive(&self) -> Result<(), GraphError> {
        for &(u, v) in self.graph.edges() {
            let (lu, lv) = (self.layer_of(u), self.layer_of(v));
            if lu.abs_diff(lv) != 1 {
                return Err(GraphError::NotLayered { u, v, lu, lv });
            }
        }
        Ok(())
    }
}

/// Assigns BFS layers from `roots` and checks that every edge joins consecutive layers.
pub fn layer_decompose(g: &Graph, roots: &[NodeId]) -> Result<LayeredGraph, GraphError> {
    if roots.is_empty() {
        return Err(GraphError::NoRoots);
    }
    let dist = g.bfs_distances(roots);
    let mut layer_of = Vec::with_capacity(dist.len());
    for (n, d) in dist.iter().enumerate() {
        layer_of.push(d.ok_or(GraphError::Disconnected(n as NodeId))? as u32);
    }
    let count = layer_of.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut layers = vec![Vec::new(); count];
    for (n, &l) in layer_of.iter().enumerate() {
        layers[l as usize].push(n as NodeId);
    }
    let lg = LayeredGraph {
        graph: g.clone(),
        layers,
        layer_of,
    };
    lg.check_consecutive()?;
    Ok(lg)
}

/// Convenience wrapper for [`GeneralMachine::embed`].
pub fn embed(m: &GeneralMachine) -> Graph {
    m.embed()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn unhex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}
