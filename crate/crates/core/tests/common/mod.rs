//! Shared helpers for the integration suites: an exhaustive min-cut oracle
//! independent of both the max-flow solver and the symbolic cut evaluator,
//! and a seeded random schedule generator.

use std::collections::BTreeSet;

use brcap_core::{EdgeCap, FlowGraph, Horizon, Instance, NodeId, RepairRound, SystemParams};
use rand::seq::SliceRandom;
use rand::Rng;

/// Minimum cut by brute force over every source/sink bipartition, reading
/// the raw edge list directly.  Exponential in the vertex count, so it
/// refuses graphs beyond 20 vertices.
pub fn exhaustive_min_cut(g: &FlowGraph, source: usize, sink: usize) -> u64 {
    let v = g.vertices().len();
    assert!(v <= 20, "oracle is exponential in vertices, got {v}");
    let others: Vec<usize> = (0..v).filter(|&i| i != source && i != sink).collect();
    let in_cut = |mask: u64, vertex: usize| -> bool {
        vertex == source
            || others
                .iter()
                .position(|&o| o == vertex)
                .is_some_and(|b| mask >> b & 1 == 1)
    };
    let mut best = u64::MAX;
    'mask: for mask in 0..(1u64 << others.len()) {
        let mut total: u64 = 0;
        for e in g.edges() {
            if in_cut(mask, e.tail) && !in_cut(mask, e.head) {
                match e.cap {
                    EdgeCap::Alpha => total += g.alpha(),
                    EdgeCap::Beta => total += g.beta(),
                    EdgeCap::Unit => total += 1,
                    EdgeCap::Infinite => continue 'mask,
                }
            }
        }
        best = best.min(total);
    }
    best
}

pub fn params(n: u32, k: u32, d: u32, r: u32, alpha: u64, beta: u64, t: u32) -> SystemParams {
    SystemParams {
        n,
        k,
        d,
        r,
        alpha,
        beta,
        horizon: Horizon::Finite(t),
    }
}

/// A uniformly random valid schedule for the given parameters.
pub fn random_schedule(p: &SystemParams, rng: &mut impl Rng) -> Instance {
    let t = p.horizon.finite().expect("finite horizon");
    let mut active: Vec<NodeId> = (1..=p.n).collect();
    let mut rounds = Vec::with_capacity(t as usize);
    for s in 1..=t {
        let failed: BTreeSet<NodeId> = active
            .choose_multiple(rng, p.r as usize)
            .copied()
            .collect();
        let survivors: Vec<NodeId> = active
            .iter()
            .copied()
            .filter(|id| !failed.contains(id))
            .collect();
        let helpers: BTreeSet<NodeId> = survivors
            .choose_multiple(rng, p.d as usize)
            .copied()
            .collect();
        active.retain(|id| !failed.contains(id));
        active.extend(p.newcomers(s));
        rounds.push(RepairRound { failed, helpers });
    }
    let instance = Instance { params: *p, rounds };
    instance.validate().expect("generated schedule is valid");
    instance
}

/// A random size-`k` collector among the nodes active after stage `s`.
pub fn random_collector(instance: &Instance, s: u32, rng: &mut impl Rng) -> BTreeSet<NodeId> {
    let active: Vec<NodeId> = instance
        .active_after(s)
        .expect("stage within horizon")
        .into_iter()
        .collect();
    active
        .choose_multiple(rng, instance.params.k as usize)
        .copied()
        .collect()
}
