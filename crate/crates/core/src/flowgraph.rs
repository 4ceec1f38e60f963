//! Information flow graphs for repair schedules, with exact cuts and flows.
//!
//! A schedule unrolls into a directed acyclic network: a source `S` holding
//! the file, an `In`/`Out` pair per storage node joined by a capacity-alpha
//! edge (the node's storage), and per repair round one auxiliary vertex per
//! helper that models the broadcast channel: the helper feeds it over a
//! capacity-beta edge and it fans out to every newcomer of the round at no
//! further cost.  A collector vertex attached to `k` node outputs with
//! infinite edges stands for a reader; the max-flow from `S` to a collector
//! bounds what that reader can decode, and the minimum over all collectors
//! and all schedules is the system capacity.
//!
//! Two constructions are provided.  [`FlowGraph::build`] is the compact
//! form used for capacity computations.  [`StagedGraph::build`] expands
//! every capacity-`c` edge into `c` parallel unit edges and gives each node
//! a per-stage output vertex (survivors forward their contents with
//! capacity-alpha edges; broadcast packets appear as one unit edge per
//! helper packet per newcomer), which is the form the coding layer needs:
//! its unit edges correspond one-to-one to coded packets.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{enumerate_collectors, Instance, ModelError, NodeId};

/// Errors from graph construction, cut queries, or collector placement.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Cut sets must contain the source.
    #[error("the cut set must contain the source vertex")]
    SourceNotInCut,
    /// Cut sets must exclude the target vertex.
    #[error("the target vertex must lie outside the cut set")]
    TargetInCut,
    /// A vertex id does not exist in this graph.
    #[error("vertex id {id} out of range ({count} vertices)")]
    VertexOutOfRange { id: usize, count: usize },
    /// An edge id does not exist in this graph.
    #[error("edge id {id} out of range ({count} edges)")]
    EdgeOutOfRange { id: usize, count: usize },
    /// A vertex role was requested that the construction never produced.
    #[error("no vertex with the requested role")]
    RoleNotFound,
    /// A collector referenced a node with no storage at that stage.
    #[error("collector node {node} is not active at stage {stage}")]
    CollectorNodeInactive { node: NodeId, stage: u32 },
    /// A collector must contact exactly `k` nodes.
    #[error("collector must contact exactly k={k} nodes, got {found}")]
    CollectorSize { k: u32, found: usize },
}

/// What a vertex stands for.  `Out` carries a stage tag only in the staged
/// construction, where a node has one output vertex per stage it lives
/// through.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum VertexRole {
    /// The file source.
    Source,
    /// A node's input side (what it receives).
    In { node: NodeId },
    /// A node's output side (what it can serve).
    Out { node: NodeId, stage: Option<u32> },
    /// The broadcast channel of one helper in one round.
    Aux { helper: NodeId, round: u32 },
    /// A reader contacting `nodes` after the given stage.
    Collector { stage: u32, nodes: BTreeSet<NodeId> },
}

/// Edge capacities stay symbolic so cuts can be reported as counts of
/// alpha-edges and beta-edges rather than opaque numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCap {
    Alpha,
    Beta,
    Unit,
    Infinite,
}

/// A directed edge between vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CapEdge {
    pub tail: usize,
    pub head: usize,
    pub cap: EdgeCap,
}

/// The value of a cut: either a symbolic count of crossing capacities or
/// infinite (an unbounded edge crosses).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutValue {
    Finite(CutTerms),
    Infinite,
}

/// Symbolic cut value: `alphas * alpha + betas * beta + units`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CutTerms {
    pub alphas: u64,
    pub betas: u64,
    pub units: u64,
}

impl CutTerms {
    /// Evaluates the symbolic value at concrete capacities.
    pub fn eval(&self, alpha: u64, beta: u64) -> u64 {
        self.alphas * alpha + self.betas * beta + self.units
    }
}

impl fmt::Display for CutValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutValue::Infinite => write!(f, "INF"),
            CutValue::Finite(t) => {
                let mut parts = Vec::new();
                match t.alphas {
                    0 => {}
                    1 => parts.push("α".to_string()),
                    a => parts.push(format!("{a}α")),
                }
                match t.betas {
                    0 => {}
                    1 => parts.push("β".to_string()),
                    b => parts.push(format!("{b}β")),
                }
                if t.units > 0 || parts.is_empty() {
                    parts.push(t.units.to_string());
                }
                write!(f, "{}", parts.join("+"))
            }
        }
    }
}

/// An information flow graph with symbolic capacities.  Immutable once
/// built; collectors are attached by cloning via [`FlowGraph::with_collector`].
#[derive(Debug, Clone)]
pub struct FlowGraph {
    alpha: u64,
    beta: u64,
    vertices: Vec<VertexRole>,
    edges: Vec<CapEdge>,
    index: HashMap<VertexRole, usize>,
}

impl FlowGraph {
    /// Unrolls a validated schedule into its flow graph (no collectors).
    pub fn build(instance: &Instance) -> Result<Self, FlowError> {
        instance.validate()?;
        let p = instance.params;
        let mut g = FlowGraph {
            alpha: p.alpha,
            beta: p.beta,
            vertices: Vec::new(),
            edges: Vec::new(),
            index: HashMap::new(),
        };
        let source = g.add_vertex(VertexRole::Source);
        for node in 1..=p.n {
            let vin = g.add_vertex(VertexRole::In { node });
            let vout = g.add_vertex(VertexRole::Out { node, stage: None });
            g.edges.push(CapEdge {
                tail: source,
                head: vin,
                cap: EdgeCap::Infinite,
            });
            g.edges.push(CapEdge {
                tail: vin,
                head: vout,
                cap: EdgeCap::Alpha,
            });
        }
        for (idx, round) in instance.rounds.iter().enumerate() {
            let s = idx as u32 + 1;
            let mut aux_ids = Vec::new();
            for &helper in &round.helpers {
                let out = g.vertex_id(&VertexRole::Out {
                    node: helper,
                    stage: None,
                })?;
                let aux = g.add_vertex(VertexRole::Aux { helper, round: s });
                g.edges.push(CapEdge {
                    tail: out,
                    head: aux,
                    cap: EdgeCap::Beta,
                });
                aux_ids.push(aux);
            }
            for newcomer in p.newcomers(s) {
                let vin = g.add_vertex(VertexRole::In { node: newcomer });
                let vout = g.add_vertex(VertexRole::Out {
                    node: newcomer,
                    stage: None,
                });
                for &aux in &aux_ids {
                    g.edges.push(CapEdge {
                        tail: aux,
                        head: vin,
                        cap: EdgeCap::Infinite,
                    });
                }
                g.edges.push(CapEdge {
                    tail: vin,
                    head: vout,
                    cap: EdgeCap::Alpha,
                });
            }
        }
        Ok(g)
    }

    fn add_vertex(&mut self, role: VertexRole) -> usize {
        let id = self.vertices.len();
        self.index.insert(role.clone(), id);
        self.vertices.push(role);
        id
    }

    /// The id of the vertex with the given role.
    pub fn vertex_id(&self, role: &VertexRole) -> Result<usize, FlowError> {
        self.index.get(role).copied().ok_or(FlowError::RoleNotFound)
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }

    pub fn vertices(&self) -> &[VertexRole] {
        &self.vertices
    }

    pub fn edges(&self) -> &[CapEdge] {
        &self.edges
    }

    /// The source vertex id (always 0 by construction).
    pub fn source(&self) -> usize {
        0
    }

    /// Returns a copy of the graph extended with a collector that reads the
    /// given nodes' outputs after `stage`, plus the collector's vertex id.
    /// In the staged construction the collector reads the stage-tagged
    /// outputs.
    fn attach_collector(
        &self,
        instance: &Instance,
        stage: u32,
        nodes: &BTreeSet<NodeId>,
        staged: bool,
    ) -> Result<(FlowGraph, usize), FlowError> {
        if nodes.len() != instance.params.k as usize {
            return Err(FlowError::CollectorSize {
                k: instance.params.k,
                found: nodes.len(),
            });
        }
        let active = instance.active_after(stage)?;
        let mut g = self.clone();
        let dc = g.add_vertex(VertexRole::Collector {
            stage,
            nodes: nodes.clone(),
        });
        for &node in nodes {
            if !active.contains(&node) {
                return Err(FlowError::CollectorNodeInactive { node, stage });
            }
            let out = g.vertex_id(&VertexRole::Out {
                node,
                stage: if staged { Some(stage) } else { None },
            })?;
            g.edges.push(CapEdge {
                tail: out,
                head: dc,
                cap: EdgeCap::Infinite,
            });
        }
        Ok((g, dc))
    }

    /// Attaches a collector to the compact construction.
    pub fn with_collector(
        &self,
        instance: &Instance,
        stage: u32,
        nodes: &BTreeSet<NodeId>,
    ) -> Result<(FlowGraph, usize), FlowError> {
        self.attach_collector(instance, stage, nodes, false)
    }

    /// The symbolic value of the cut `(x, V \ x)`: the sum of capacities of
    /// edges leaving `x`.  The source must lie in `x` and `target` outside;
    /// a crossing infinite edge makes the cut [`CutValue::Infinite`].
    pub fn cut_value(&self, x: &BTreeSet<usize>, target: usize) -> Result<CutValue, FlowError> {
        for &id in x {
            if id >= self.vertices.len() {
                return Err(FlowError::VertexOutOfRange {
                    id,
                    count: self.vertices.len(),
                });
            }
        }
        if target >= self.vertices.len() {
            return Err(FlowError::VertexOutOfRange {
                id: target,
                count: self.vertices.len(),
            });
        }
        if !x.contains(&self.source()) {
            return Err(FlowError::SourceNotInCut);
        }
        if x.contains(&target) {
            return Err(FlowError::TargetInCut);
        }
        let mut terms = CutTerms::default();
        for e in &self.edges {
            if x.contains(&e.tail) && !x.contains(&e.head) {
                match e.cap {
                    EdgeCap::Alpha => terms.alphas += 1,
                    EdgeCap::Beta => terms.betas += 1,
                    EdgeCap::Unit => terms.units += 1,
                    EdgeCap::Infinite => return Ok(CutValue::Infinite),
                }
            }
        }
        Ok(CutValue::Finite(terms))
    }

    /// Exact integer max-flow from `source` to `sink`.  Infinite capacities
    /// are materialized as `1 + sum of all finite capacities`, which no
    /// finite cut can reach.
    pub fn max_flow(&self, source: usize, sink: usize) -> Result<u64, FlowError> {
        for id in [source, sink] {
            if id >= self.vertices.len() {
                return Err(FlowError::VertexOutOfRange {
                    id,
                    count: self.vertices.len(),
                });
            }
        }
        if source == sink {
            return Ok(0);
        }
        let finite_sum: u64 = self
            .edges
            .iter()
            .map(|e| match e.cap {
                EdgeCap::Alpha => self.alpha,
                EdgeCap::Beta => self.beta,
                EdgeCap::Unit => 1,
                EdgeCap::Infinite => 0,
            })
            .sum();
        let unbounded = finite_sum + 1;
        let arcs: Vec<(usize, usize, u64)> = self
            .edges
            .iter()
            .map(|e| {
                let c = match e.cap {
                    EdgeCap::Alpha => self.alpha,
                    EdgeCap::Beta => self.beta,
                    EdgeCap::Unit => 1,
                    EdgeCap::Infinite => unbounded,
                };
                (e.tail, e.head, c)
            })
            .collect();
        Ok(dinic(self.vertices.len(), &arcs, source, sink))
    }

    /// Plain-text edge list, one `tail head capacity` line per edge with
    /// `INF` for infinite capacities.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let cap = match e.cap {
                EdgeCap::Alpha => self.alpha.to_string(),
                EdgeCap::Beta => self.beta.to_string(),
                EdgeCap::Unit => "1".to_string(),
                EdgeCap::Infinite => "INF".to_string(),
            };
            out.push_str(&format!("{} {} {}\n", e.tail, e.head, cap));
        }
        out
    }

    /// JSON table mapping vertex ids to their roles.
    pub fn vertex_table(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.vertices
                .iter()
                .enumerate()
                .map(|(id, role)| {
                    let mut obj = serde_json::to_value(role).expect("role serializes");
                    obj.as_object_mut()
                        .expect("role is an object")
                        .insert("id".into(), id.into());
                    obj
                })
                .collect(),
        )
    }
}

/// Minimum over every stage and every collector of the max-flow the
/// collector can draw: the most any reader is guaranteed to decode under
/// this schedule.
pub fn instance_capacity(instance: &Instance) -> Result<u64, FlowError> {
    let graph = FlowGraph::build(instance)?;
    let mut best: Option<u64> = None;
    for s in 0..=instance.rounds.len() as u32 {
        for nodes in enumerate_collectors(instance, s)? {
            let (g, dc) = graph.with_collector(instance, s, &nodes)?;
            let flow = g.max_flow(g.source(), dc)?;
            best = Some(best.map_or(flow, |b| b.min(flow)));
        }
    }
    // A valid schedule always admits at least the stage-0 collectors.
    Ok(best.expect("at least one collector"))
}

/// Identifies one unit edge of the staged construction.  `unit` numbers the
/// parallel copies of a capacity-`c` edge from 0 to `c - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StagedEdgeKey {
    /// Source delivery to an initial node (stage -1).
    SourceIn { node: NodeId, unit: u64 },
    /// A node writing one packet to its stage-`stage` storage.
    Storage { node: NodeId, stage: u32, unit: u64 },
    /// A survivor carrying one stored packet from stage `stage - 1` to
    /// stage `stage`.
    Forward { node: NodeId, stage: u32, unit: u64 },
    /// A helper handing one packet to its round-`stage` broadcast channel.
    HelperIn { helper: NodeId, stage: u32, unit: u64 },
    /// One broadcast packet of `helper` arriving at `newcomer`.
    Broadcast {
        helper: NodeId,
        newcomer: NodeId,
        stage: u32,
        unit: u64,
    },
}

impl StagedEdgeKey {
    /// The stage this edge belongs to (source edges are stage -1).
    pub fn stage(&self) -> i32 {
        match *self {
            StagedEdgeKey::SourceIn { .. } => -1,
            StagedEdgeKey::Storage { stage, .. } => stage as i32,
            StagedEdgeKey::Forward { stage, .. } => stage as i32,
            StagedEdgeKey::HelperIn { stage, .. } => stage as i32,
            StagedEdgeKey::Broadcast { stage, .. } => stage as i32,
        }
    }
}

/// The staged unit-edge construction of a schedule's flow graph.  Every
/// edge is a unit edge tagged with a [`StagedEdgeKey`]; coded packets in
/// the network correspond one-to-one to these edges.
#[derive(Debug, Clone)]
pub struct StagedGraph {
    graph: FlowGraph,
    keys: Vec<StagedEdgeKey>,
    instance: Instance,
}

impl StagedGraph {
    /// Expands a validated schedule into unit edges with per-stage output
    /// vertices.
    pub fn build(instance: &Instance) -> Result<Self, FlowError> {
        instance.validate()?;
        let p = instance.params;
        let mut g = FlowGraph {
            alpha: p.alpha,
            beta: p.beta,
            vertices: Vec::new(),
            edges: Vec::new(),
            index: HashMap::new(),
        };
        let mut keys = Vec::new();
        let unit_edge = |g: &mut FlowGraph, keys: &mut Vec<StagedEdgeKey>, tail, head, key| {
            g.edges.push(CapEdge {
                tail,
                head,
                cap: EdgeCap::Unit,
            });
            keys.push(key);
        };

        let source = g.add_vertex(VertexRole::Source);
        for node in 1..=p.n {
            let vin = g.add_vertex(VertexRole::In { node });
            let vout = g.add_vertex(VertexRole::Out {
                node,
                stage: Some(0),
            });
            for unit in 0..p.alpha {
                unit_edge(&mut g, &mut keys, source, vin, StagedEdgeKey::SourceIn { node, unit });
            }
            for unit in 0..p.alpha {
                unit_edge(
                    &mut g,
                    &mut keys,
                    vin,
                    vout,
                    StagedEdgeKey::Storage { node, stage: 0, unit },
                );
            }
        }
        for (idx, round) in instance.rounds.iter().enumerate() {
            let s = idx as u32 + 1;
            let active_before = instance.active_after(s - 1)?;
            // Survivors get a fresh output vertex fed by their previous one.
            for &node in active_before.iter().filter(|id| !round.failed.contains(id)) {
                let prev = g.vertex_id(&VertexRole::Out {
                    node,
                    stage: Some(s - 1),
                })?;
                let next = g.add_vertex(VertexRole::Out {
                    node,
                    stage: Some(s),
                });
                for unit in 0..p.alpha {
                    unit_edge(
                        &mut g,
                        &mut keys,
                        prev,
                        next,
                        StagedEdgeKey::Forward { node, stage: s, unit },
                    );
                }
            }
            let mut aux_ids = Vec::new();
            for &helper in &round.helpers {
                let prev = g.vertex_id(&VertexRole::Out {
                    node: helper,
                    stage: Some(s - 1),
                })?;
                let aux = g.add_vertex(VertexRole::Aux { helper, round: s });
                for unit in 0..p.beta {
                    unit_edge(
                        &mut g,
                        &mut keys,
                        prev,
                        aux,
                        StagedEdgeKey::HelperIn { helper, stage: s, unit },
                    );
                }
                aux_ids.push((helper, aux));
            }
            for newcomer in p.newcomers(s) {
                let vin = g.add_vertex(VertexRole::In { node: newcomer });
                let vout = g.add_vertex(VertexRole::Out {
                    node: newcomer,
                    stage: Some(s),
                });
                for &(helper, aux) in &aux_ids {
                    for unit in 0..p.beta {
                        unit_edge(
                            &mut g,
                            &mut keys,
                            aux,
                            vin,
                            StagedEdgeKey::Broadcast {
                                helper,
                                newcomer,
                                stage: s,
                                unit,
                            },
                        );
                    }
                }
                for unit in 0..p.alpha {
                    unit_edge(
                        &mut g,
                        &mut keys,
                        vin,
                        vout,
                        StagedEdgeKey::Storage {
                            node: newcomer,
                            stage: s,
                            unit,
                        },
                    );
                }
            }
        }
        Ok(StagedGraph {
            graph: g,
            keys,
            instance: instance.clone(),
        })
    }

    pub fn graph(&self) -> &FlowGraph {
        &self.graph
    }

    pub fn keys(&self) -> &[StagedEdgeKey] {
        &self.keys
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// Edge ids belonging to stage `s` (source edges are stage -1).
    pub fn stage_edges(&self, s: i32) -> Vec<usize> {
        self.keys
            .iter()
            .enumerate()
            .filter(|(_, k)| k.stage() == s)
            .map(|(i, _)| i)
            .collect()
    }

    /// The edge id for a key, if the schedule produced it.
    pub fn edge_id(&self, key: &StagedEdgeKey) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// Attaches a collector to the staged construction (reads the k nodes'
    /// stage-`stage` outputs).
    pub fn with_collector(
        &self,
        stage: u32,
        nodes: &BTreeSet<NodeId>,
    ) -> Result<(FlowGraph, usize), FlowError> {
        self.graph.attach_collector(&self.instance, stage, nodes, true)
    }

    /// Whether the given unit edges are path-independent: each can be
    /// reached from the source by its own path, with all paths edge-
    /// disjoint, while the source emits at most `omega` units (the file
    /// size).  Decided by a unit-capacity max-flow in which the subset
    /// edges are redirected into a super-sink behind a capacity-`omega`
    /// super-source.
    pub fn path_independent(&self, subset: &[usize], omega: u64) -> Result<bool, FlowError> {
        for &id in subset {
            if id >= self.graph.edges.len() {
                return Err(FlowError::EdgeOutOfRange {
                    id,
                    count: self.graph.edges.len(),
                });
            }
        }
        if (subset.len() as u64) > omega {
            return Ok(false);
        }
        let in_subset: BTreeSet<usize> = subset.iter().copied().collect();
        // A repeated edge can never sit on two edge-disjoint paths.
        if in_subset.len() != subset.len() {
            return Ok(false);
        }
        let n = self.graph.vertices.len();
        let super_source = n;
        let super_sink = n + 1;
        let mut arcs: Vec<(usize, usize, u64)> = self
            .graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if in_subset.contains(&i) {
                    (e.tail, super_sink, 1)
                } else {
                    (e.tail, e.head, 1)
                }
            })
            .collect();
        arcs.push((super_source, self.graph.source(), omega));
        let flow = dinic(n + 2, &arcs, super_source, super_sink);
        Ok(flow == subset.len() as u64)
    }
}

/// Dinic's algorithm on an explicit arc list.  Exact for integer
/// capacities; intended for the small graphs schedules unroll into.
fn dinic(n: usize, arcs: &[(usize, usize, u64)], s: usize, t: usize) -> u64 {
    #[derive(Clone)]
    struct Arc {
        to: usize,
        cap: u64,
        rev: usize,
    }
    let mut g: Vec<Vec<Arc>> = vec![Vec::new(); n];
    for &(u, v, c) in arcs {
        let rev_u = g[v].len();
        let rev_v = g[u].len();
        g[u].push(Arc { to: v, cap: c, rev: rev_u });
        g[v].push(Arc { to: u, cap: 0, rev: rev_v });
    }

    fn bfs(g: &[Vec<Arc>], s: usize, t: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; g.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for arc in &g[u] {
                if arc.cap > 0 && level[arc.to] == u32::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[t] != u32::MAX).then_some(level)
    }

    fn dfs(
        g: &mut [Vec<Arc>],
        level: &[u32],
        iter: &mut [usize],
        u: usize,
        t: usize,
        limit: u64,
    ) -> u64 {
        if u == t {
            return limit;
        }
        while iter[u] < g[u].len() {
            let (to, cap) = {
                let arc = &g[u][iter[u]];
                (arc.to, arc.cap)
            };
            if cap > 0 && level[to] == level[u] + 1 {
                let pushed = dfs(g, level, iter, to, t, limit.min(cap));
                if pushed > 0 {
                    let rev = g[u][iter[u]].rev;
                    g[u][iter[u]].cap -= pushed;
                    g[to][rev].cap += pushed;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        0
    }

    let mut flow = 0u64;
    while let Some(level) = bfs(&g, s, t) {
        let mut iter = vec![0usize; n];
        loop {
            let pushed = dfs(&mut g, &level, &mut iter, s, t, u64::MAX);
            if pushed == 0 {
                break;
            }
            flow += pushed;
        }
    }
    flow
}
