//! Network-coded repair simulation on the staged graph.
//!
//! Every coded packet in the system is tracked by its *global encoding
//! kernel*: the length-`omega` vector of coefficients expressing the packet
//! as a combination of the `omega` source symbols.  Payloads never need to
//! be materialized — a collector can decode exactly when the kernels it
//! gathers span the full space, so decoding is a rank condition and a
//! whole simulation is a walk over the staged graph assigning one kernel
//! per unit edge.
//!
//! Two assignment strategies are provided.  [`CodeState::rlnc_round`]
//! draws uniformly random combinations (helpers combine their stored
//! packets, newcomers combine everything they hear), which decodes with
//! high probability over large fields.  [`CodeState::generic_round`]
//! deterministically picks each kernel to avoid the span of every
//! independent `omega-1`-subset of the packets assigned so far whose span
//! does not already swallow the whole choice space; over a field larger
//! than `C(n*alpha + d*beta, omega-1)` such a choice always exists, and
//! the resulting code makes *every* collector with enough min-cut decode
//! at every stage — not just with high probability.
//!
//! Verification helpers close the loop: [`CodeState::check_decodable`] is
//! the rank condition for one collector, [`CodeState::decode_matrix`]
//! sweeps all of them, and [`CodeState::check_generic_property`] certifies
//! the defining property of the deterministic code (every path-independent
//! `omega`-subset of a stage's edges has independent kernels), deciding
//! path-independence by unit-capacity max-flow.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::{FlowError, StagedEdgeKey, StagedGraph};
use crate::galois::{Field, FieldMatrix, GaloisError};
use crate::model::{enumerate_collectors, Instance, ModelError, NodeId, SystemParams};

/// Errors from kernel assignment or verification.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetcodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    /// The file dimension must fit what any `k` nodes can store.
    #[error("file dimension {omega} outside 1..=k*alpha = {limit}")]
    OmegaOutOfRange { omega: usize, limit: u64 },
    /// Source initialization needs one distinct evaluation point per
    /// initial packet.
    #[error("field of order {order} too small for {needed} distinct source evaluation points")]
    SourceFieldTooSmall { order: u64, needed: u64 },
    /// The deterministic code is only guaranteed above this field size.
    #[error("field of order {order} does not exceed the deterministic-code bound C(n*alpha+d*beta, omega-1) = {bound}")]
    GenericFieldTooSmall { order: u64, bound: u128 },
    /// The simulation already consumed every scheduled round.
    #[error("round {next} requested but the schedule has only {rounds} rounds")]
    NoMoreRounds { next: u32, rounds: usize },
    /// Verification asked about a stage the simulation has not reached.
    #[error("stage {stage} not simulated yet (completed through stage {simulated})")]
    StageNotSimulated { stage: u32, simulated: u32 },
    /// A collector node is failed (or not yet created) at the stage.
    #[error("node {node} holds no packets at stage {stage}")]
    CollectorInactive { node: NodeId, stage: u32 },
    /// Exhaustive subset verification would exceed the configured budget.
    #[error("{count} subsets exceed the verification cap of {cap}")]
    SubsetCapExceeded { count: u128, cap: u64 },
    /// The deterministic search ran out of candidates.  Under the field
    /// bound this cannot happen, so it indicates a violated precondition.
    #[error("no admissible kernel at stage {stage}: the field is too small for the deterministic guarantee")]
    KernelSearchExhausted { stage: u32 },
}

/// How the kernels of one stage were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    /// Source initialization (distinct-point polynomial evaluation).
    Source,
    /// Uniformly random combinations.
    Rlnc,
    /// Deterministic span-avoiding search.
    Deterministic,
    /// Random sampling because the span-avoiding search exceeded its
    /// subset budget; the guarantee degrades to probabilistic.
    RandomizedFallback,
}

/// What a newcomer does with the broadcasts it hears under random coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RlncPolicy {
    /// Store `alpha` random combinations of everything received.
    #[default]
    Compress,
    /// Store the received kernels verbatim (first `d*beta` slots), random
    /// combinations in any remaining slots.  Keeps the stored span exactly
    /// equal to the received span; only sensible when `alpha >= d*beta`.
    CopyReceived,
}

/// Snapshot of one completed stage, written as one line of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: u32,
    pub mode: StageMode,
    /// Kernels stored by every node active after this stage.
    pub stored: BTreeMap<NodeId, Vec<Vec<u32>>>,
    /// Kernels each helper broadcast during this stage (empty at stage 0).
    pub broadcast: BTreeMap<NodeId, Vec<Vec<u32>>>,
}

/// A decodability verdict for one collector at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeCell {
    pub stage: u32,
    pub collector: BTreeSet<NodeId>,
    pub ok: bool,
}

/// `C(n*alpha + d*beta, omega-1)`: the field-size bound above which the
/// deterministic assignment is guaranteed to succeed.  Saturates at
/// `u128::MAX`, which no supported field exceeds anyway.
pub fn generic_field_bound(params: &SystemParams, omega: usize) -> u128 {
    let m = params.n as u128 * params.alpha as u128 + params.d as u128 * params.beta as u128;
    binomial_u128(m, (omega as u128).saturating_sub(1))
}

/// The full kernel assignment of a simulation, stage by stage.
#[derive(Debug, Clone)]
pub struct CodeState {
    field: Field,
    omega: usize,
    staged: StagedGraph,
    /// Kernel per unit edge of the staged graph, keyed by edge id.
    kernels: BTreeMap<usize, Vec<u32>>,
    /// Completed stages; `history[s]` describes stage `s`.
    history: Vec<StageRecord>,
}

impl CodeState {
    /// Spreads the source over the initial nodes: packet `t` (node-major,
    /// `t = (j-1)*alpha + i`) gets the kernel `(1, t, t^2, .., t^(omega-1))`
    /// evaluated at the field element `t`.  Distinct points make every
    /// `omega`-subset of kernels independent, so any `k` initial nodes can
    /// decode immediately.
    pub fn init_source(instance: &Instance, field: Field, omega: usize) -> Result<Self, NetcodeError> {
        instance.validate()?;
        let p = instance.params;
        let limit = p.k as u64 * p.alpha;
        if omega == 0 || omega as u64 > limit {
            return Err(NetcodeError::OmegaOutOfRange { omega, limit });
        }
        let points = p.n as u64 * p.alpha;
        if field.order() < points {
            return Err(NetcodeError::SourceFieldTooSmall {
                order: field.order(),
                needed: points,
            });
        }
        let staged = StagedGraph::build(instance)?;
        let mut state = CodeState {
            field,
            omega,
            staged,
            kernels: BTreeMap::new(),
            history: Vec::new(),
        };
        let mut stored: BTreeMap<NodeId, Vec<Vec<u32>>> = BTreeMap::new();
        for node in 1..=p.n {
            let mut vectors = Vec::with_capacity(p.alpha as usize);
            for unit in 0..p.alpha {
                let t = (node as u64 - 1) * p.alpha + unit;
                let point = field.element(t)?;
                let kernel: Vec<u32> = (0..omega)
                    .map(|e| field.pow(point, e as u64))
                    .collect();
                state.set_kernel(StagedEdgeKey::SourceIn { node, unit }, kernel.clone());
                state.set_kernel(
                    StagedEdgeKey::Storage { node, stage: 0, unit },
                    kernel.clone(),
                );
                vectors.push(kernel);
            }
            stored.insert(node, vectors);
        }
        state.history.push(StageRecord {
            stage: 0,
            mode: StageMode::Source,
            stored,
            broadcast: BTreeMap::new(),
        });
        Ok(state)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn instance(&self) -> &Instance {
        self.staged.instance()
    }

    pub fn staged(&self) -> &StagedGraph {
        &self.staged
    }

    /// The last completed stage.
    pub fn stage(&self) -> u32 {
        self.history.len() as u32 - 1
    }

    pub fn history(&self) -> &[StageRecord] {
        &self.history
    }

    /// Kernels stored by `node` at stage `s`, if it is active there.
    pub fn stored(&self, s: u32, node: NodeId) -> Option<&Vec<Vec<u32>>> {
        self.history.get(s as usize)?.stored.get(&node)
    }

    /// Kernel on a staged-graph edge, if assigned.
    pub fn kernel(&self, edge: usize) -> Option<&Vec<u32>> {
        self.kernels.get(&edge)
    }

    fn set_kernel(&mut self, key: StagedEdgeKey, kernel: Vec<u32>) {
        let id = self
            .staged
            .edge_id(&key)
            .expect("assigned key exists in the staged graph");
        self.kernels.insert(id, kernel);
    }

    fn next_round(&self) -> Result<u32, NetcodeError> {
        let next = self.stage() + 1;
        let rounds = self.instance().rounds.len();
        if next as usize > rounds {
            return Err(NetcodeError::NoMoreRounds { next, rounds });
        }
        Ok(next)
    }

    /// A uniformly random combination of `generators` (possibly empty, in
    /// which case the zero vector).
    fn random_combo(&self, generators: &[Vec<u32>], rng: &mut dyn RngCore) -> Vec<u32> {
        let f = self.field;
        let mut out = vec![0u32; self.omega];
        for g in generators {
            let c = (rng.next_u64() % f.order()) as u32;
            for (o, &v) in out.iter_mut().zip(g) {
                *o = f.add(*o, f.mul(c, v));
            }
        }
        out
    }

    /// Runs the next repair round with uniformly random combinations.
    pub fn rlnc_round(&mut self, rng: &mut dyn RngCore) -> Result<(), NetcodeError> {
        self.rlnc_round_with(rng, RlncPolicy::Compress)
    }

    /// [`CodeState::rlnc_round`] with an explicit newcomer storage policy.
    ///
    /// Sampling order is fixed — helpers ascending, units ascending, then
    /// newcomers ascending, units ascending — so a seeded generator
    /// reproduces the run exactly.
    pub fn rlnc_round_with(
        &mut self,
        rng: &mut dyn RngCore,
        policy: RlncPolicy,
    ) -> Result<(), NetcodeError> {
        let s = self.next_round()?;
        let p = self.instance().params;
        let round = self.instance().rounds[s as usize - 1].clone();
        let newcomers = p.newcomers(s);

        let mut stored = self.carry_survivors(s, &round.failed);

        let mut broadcast: BTreeMap<NodeId, Vec<Vec<u32>>> = BTreeMap::new();
        let mut received: Vec<Vec<u32>> = Vec::with_capacity((p.d as u64 * p.beta) as usize);
        for &h in &round.helpers {
            let own = self.history[s as usize - 1].stored[&h].clone();
            let mut sent = Vec::with_capacity(p.beta as usize);
            for unit in 0..p.beta {
                let kernel = self.random_combo(&own, rng);
                self.set_kernel(StagedEdgeKey::HelperIn { helper: h, stage: s, unit }, kernel.clone());
                for &t in &newcomers {
                    self.set_kernel(
                        StagedEdgeKey::Broadcast { helper: h, newcomer: t, stage: s, unit },
                        kernel.clone(),
                    );
                }
                sent.push(kernel.clone());
                received.push(kernel);
            }
            broadcast.insert(h, sent);
        }

        for &t in &newcomers {
            let mut vectors = Vec::with_capacity(p.alpha as usize);
            for unit in 0..p.alpha {
                let kernel = match policy {
                    RlncPolicy::CopyReceived if (unit as usize) < received.len() => {
                        received[unit as usize].clone()
                    }
                    _ => self.random_combo(&received, rng),
                };
                self.set_kernel(StagedEdgeKey::Storage { node: t, stage: s, unit }, kernel.clone());
                vectors.push(kernel);
            }
            stored.insert(t, vectors);
        }

        self.history.push(StageRecord {
            stage: s,
            mode: StageMode::Rlnc,
            stored,
            broadcast,
        });
        Ok(())
    }

    /// Copies every survivor's kernels onto its stage-`s` forwarding edges
    /// and returns the survivor part of the new stored map.
    fn carry_survivors(
        &mut self,
        s: u32,
        failed: &BTreeSet<NodeId>,
    ) -> BTreeMap<NodeId, Vec<Vec<u32>>> {
        let prev = self.history[s as usize - 1].stored.clone();
        let mut stored = BTreeMap::new();
        for (node, vectors) in prev {
            if failed.contains(&node) {
                continue;
            }
            for (unit, kernel) in vectors.iter().enumerate() {
                self.set_kernel(
                    StagedEdgeKey::Forward { node, stage: s, unit: unit as u64 },
                    kernel.clone(),
                );
            }
            stored.insert(node, vectors);
        }
        stored
    }

    /// Runs the next repair round with the deterministic span-avoiding
    /// assignment.
    ///
    /// Each helper kernel, then each newcomer storage kernel, is the first
    /// combination (coefficients counted in base-`q` over the tail's
    /// packets) lying outside the span of every independent
    /// `omega-1`-subset of the packets assigned so far whose span does not
    /// already contain the whole choice space.  Checking one candidate
    /// touches every such subset, so the enumeration is budgeted by
    /// `subset_cap`: beyond it the round falls back to random sampling
    /// from `rng` and records that the guarantee is now probabilistic.
    pub fn generic_round(
        &mut self,
        subset_cap: u64,
        rng: &mut dyn RngCore,
    ) -> Result<(), NetcodeError> {
        let s = self.next_round()?;
        let p = self.instance().params;
        let bound = generic_field_bound(&p, self.omega);
        if (self.field.order() as u128) <= bound {
            return Err(NetcodeError::GenericFieldTooSmall {
                order: self.field.order(),
                bound,
            });
        }
        let round = self.instance().rounds[s as usize - 1].clone();
        let newcomers = p.newcomers(s);

        let mut stored = self.carry_survivors(s, &round.failed);

        // The growing pool the span-avoidance rule quantifies over:
        // initially the survivors' carried kernels.
        let mut pool: Vec<Vec<u32>> = stored.values().flatten().cloned().collect();
        let mut mode = StageMode::Deterministic;

        let mut broadcast: BTreeMap<NodeId, Vec<Vec<u32>>> = BTreeMap::new();
        let mut received: Vec<Vec<u32>> = Vec::new();
        for &h in &round.helpers {
            let own = self.history[s as usize - 1].stored[&h].clone();
            let mut sent = Vec::with_capacity(p.beta as usize);
            for unit in 0..p.beta {
                let kernel = self.avoiding_choice(&own, &pool, subset_cap, rng, &mut mode, s)?;
                self.set_kernel(StagedEdgeKey::HelperIn { helper: h, stage: s, unit }, kernel.clone());
                // Broadcast edges repeat the helper kernel verbatim; the
                // copies never constrain later choices (any subset
                // containing both copies is dependent), so they are not
                // added to the pool.
                for &t in &newcomers {
                    self.set_kernel(
                        StagedEdgeKey::Broadcast { helper: h, newcomer: t, stage: s, unit },
                        kernel.clone(),
                    );
                }
                pool.push(kernel.clone());
                sent.push(kernel.clone());
                received.push(kernel);
            }
            broadcast.insert(h, sent);
        }

        for &t in &newcomers {
            let mut vectors = Vec::with_capacity(p.alpha as usize);
            for unit in 0..p.alpha {
                let kernel = self.avoiding_choice(&received, &pool, subset_cap, rng, &mut mode, s)?;
                self.set_kernel(StagedEdgeKey::Storage { node: t, stage: s, unit }, kernel.clone());
                pool.push(kernel.clone());
                vectors.push(kernel);
            }
            stored.insert(t, vectors);
        }

        self.history.push(StageRecord {
            stage: s,
            mode,
            stored,
            broadcast,
        });
        Ok(())
    }

    /// Picks a kernel from the span of `generators` avoiding every
    /// independent `omega-1`-subset of `pool` that does not already span
    /// the whole generator space.
    fn avoiding_choice(
        &self,
        generators: &[Vec<u32>],
        pool: &[Vec<u32>],
        subset_cap: u64,
        rng: &mut dyn RngCore,
        mode: &mut StageMode,
        stage: u32,
    ) -> Result<Vec<u32>, NetcodeError> {
        let f = self.field;
        let subsets = binomial_u128(pool.len() as u128, self.omega as u128 - 1);
        if subsets > subset_cap as u128 {
            // Too many subsets to certify: sample instead and record the
            // downgrade.  A few retries dodge the (rare) zero draw.
            *mode = StageMode::RandomizedFallback;
            for _ in 0..64 {
                let kernel = self.random_combo(generators, rng);
                if kernel.iter().any(|&v| v != 0) || generators.is_empty() {
                    return Ok(kernel);
                }
            }
            return Err(NetcodeError::KernelSearchExhausted { stage });
        }

        // Pre-reduce the obstructing subsets once.
        let gen_matrix = {
            let mut m = FieldMatrix::empty(f, self.omega);
            for g in generators {
                m.push_row(g.clone())?;
            }
            m
        };
        let mut obstructions: Vec<FieldMatrix> = Vec::new();
        let mut choose = Combinations::new(pool.len(), self.omega - 1);
        while let Some(idx) = choose.next() {
            let mut m = FieldMatrix::empty(f, self.omega);
            for &i in idx {
                m.push_row(pool[i].clone())?;
            }
            if m.rank() < self.omega - 1 {
                continue;
            }
            if generators.iter().all(|g| m.in_span(g).unwrap_or(false)) {
                continue;
            }
            obstructions.push(m);
        }

        // Walk candidate coefficient vectors in base-q order; the zero
        // candidate survives only when nothing obstructs (degenerate
        // generator spaces), matching the assignment rule exactly.
        let q = f.order();
        let mut coeffs = vec![0u32; generators.len()];
        loop {
            let mut kernel = vec![0u32; self.omega];
            for (c, g) in coeffs.iter().zip(generators) {
                for (o, &v) in kernel.iter_mut().zip(g) {
                    *o = f.add(*o, f.mul(*c, v));
                }
            }
            let clear = obstructions
                .iter()
                .all(|m| !m.in_span(&kernel).unwrap_or(true));
            if clear {
                debug_assert!(gen_matrix.in_span(&kernel).unwrap_or(false) || generators.is_empty());
                return Ok(kernel);
            }
            // Increment the base-q counter.
            let mut pos = 0;
            loop {
                if pos == coeffs.len() {
                    return Err(NetcodeError::KernelSearchExhausted { stage });
                }
                coeffs[pos] += 1;
                if coeffs[pos] as u64 == q {
                    coeffs[pos] = 0;
                    pos += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Whether collector `nodes` can decode at stage `s`: their stored
    /// kernels must have rank `omega`.
    pub fn check_decodable(&self, s: u32, nodes: &BTreeSet<NodeId>) -> Result<bool, NetcodeError> {
        let record = self.record(s)?;
        let mut m = FieldMatrix::empty(self.field, self.omega);
        for &node in nodes {
            let vectors = record
                .stored
                .get(&node)
                .ok_or(NetcodeError::CollectorInactive { node, stage: s })?;
            for v in vectors {
                m.push_row(v.clone())?;
            }
        }
        Ok(m.rank() == self.omega)
    }

    fn record(&self, s: u32) -> Result<&StageRecord, NetcodeError> {
        self.history
            .get(s as usize)
            .ok_or(NetcodeError::StageNotSimulated {
                stage: s,
                simulated: self.stage(),
            })
    }

    /// Sweeps every stage simulated so far and every size-`k` collector,
    /// returning one verdict per pair.
    pub fn decode_matrix(&self) -> Result<Vec<DecodeCell>, NetcodeError> {
        let mut cells = Vec::new();
        for s in 0..=self.stage() {
            for collector in enumerate_collectors(self.instance(), s)? {
                let ok = self.check_decodable(s, &collector)?;
                cells.push(DecodeCell {
                    stage: s,
                    collector,
                    ok,
                });
            }
        }
        Ok(cells)
    }

    /// Certifies the stage-`s` edge set: every `omega`-subset reachable by
    /// edge-disjoint paths from the source must carry independent kernels.
    /// Stage `-1` checks the source evaluation edges themselves.  Refuses
    /// (rather than truncates) when `C(|E_s|, omega)` exceeds `cap`.
    pub fn check_generic_property(&self, s: i32, cap: u64) -> Result<bool, NetcodeError> {
        if s > self.stage() as i32 {
            return Err(NetcodeError::StageNotSimulated {
                stage: s.max(0) as u32,
                simulated: self.stage(),
            });
        }
        let edges = self.staged.stage_edges(s);
        let count = binomial_u128(edges.len() as u128, self.omega as u128);
        if count > cap as u128 {
            return Err(NetcodeError::SubsetCapExceeded { count, cap });
        }
        let mut choose = Combinations::new(edges.len(), self.omega);
        while let Some(idx) = choose.next() {
            let subset: Vec<usize> = idx.iter().map(|&i| edges[i]).collect();
            if !self.staged.path_independent(&subset, self.omega as u64)? {
                continue;
            }
            let mut m = FieldMatrix::empty(self.field, self.omega);
            for &e in &subset {
                let kernel = self.kernels.get(&e).expect("stage edges are assigned");
                m.push_row(kernel.clone())?;
            }
            if m.rank() != self.omega {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
fn binomial_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut value: u128 = 1;
    for i in 0..k {
        match value.checked_mul(n - i) {
            Some(v) => value = v / (i + 1),
            None => return u128::MAX,
        }
    }
    value
}

/// Lexicographic k-subset index generator (no allocation per step).
struct Combinations {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    fresh: bool,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            idx: (0..k).collect(),
            fresh: true,
            done: k > n,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(&self.idx);
        }
        let mut i = self.k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - (self.k - i) {
                self.idx[i] += 1;
                for j in i + 1..self.k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}
