//! The storage capacity of a batch-repair system and the schedules that
//! attain it.
//!
//! For parameters with `r < k` the guaranteed file size is the minimum of
//! an explicit objective over a small combinatorial family: a subset
//! `T1` of the first `k` repair rounds and a vector `x = (x_0, .., x_k)`
//! with `0 <= x_0 <= n`, `0 <= x_s <= r`, and `sum(x) = k`.  The vector
//! says how a hypothetical reader splits its `k` contacts over the initial
//! nodes (`x_0`) and the newcomers of each round (`x_s`); rounds in `T1`
//! charge the reader the newcomers' fresh storage (`x_s * alpha`) while the
//! remaining rounds charge the broadcast that repaired them, discounted by
//! everything already counted (`(d - x_0 - .. - x_{s-1}) * beta`):
//!
//! ```text
//! B = min  x_0*alpha + sum_{s in T1} x_s*alpha
//!        + sum_{s not in T1} (d - sum_{i<s} x_i) * beta
//! ```
//!
//! [`bound_b`] evaluates this exhaustively, [`bound_b_restricted`] prunes
//! the search to `x` components in `{0, r}` (lossless when `r` divides
//! `k`), and [`closed_form`] is the resulting closed expression.  The
//! bound is tight: [`worst_case_schedule`] turns any optimal solution into
//! a concrete schedule whose designated collector can draw exactly `B`,
//! and [`capacity_t`] confirms it by brute force over every schedule of a
//! given horizon.
//!
//! When `r >= k` every repair round re-creates a full reconstruction set
//! from broadcast data alone, so the interesting quantity is the repair
//! bandwidth rather than a nontrivial capacity; these routines refuse such
//! parameters and point at the trivial-case rate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowgraph::{instance_capacity, FlowError, FlowGraph};
use crate::model::{
    enumerate_instances, Horizon, Instance, ModelError, NodeId, RepairRound, SystemParams,
};

/// Errors from bound evaluation or schedule construction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CapacityError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    /// `r >= k`: after any round the newcomers alone form a reconstruction
    /// set, so capacity degenerates to `min(k*alpha, d*beta)` and the
    /// per-failure repair rate `tau = C / r` is the quantity of interest.
    #[error("r={r} >= k={k} is the trivial regime: capacity is min(k*alpha, d*beta) and repair bandwidth per failure is C/r")]
    TrivialRegime { r: u32, k: u32 },
    /// The pruned search and the closed form require `r` to divide `k`.
    #[error("this form requires r to divide k (r={r}, k={k})")]
    DivisibilityRequired { r: u32, k: u32 },
    /// A solution vector violates its box or sum constraints.
    #[error("infeasible solution: {reason}")]
    InfeasibleSolution { reason: String },
    /// A solution's claimed value disagrees with the objective.
    #[error("solution claims value {claimed} but evaluates to {actual}")]
    SolutionMismatch { claimed: u64, actual: u64 },
    /// Building a worst-case schedule needs at least `k` rounds.
    #[error("worst-case schedule needs a horizon of at least k={k} rounds, got T={t}")]
    HorizonTooShort { t: u32, k: u32 },
}

/// An optimizer of the capacity bound: the bound's value together with the
/// round subset and contact-split vector that attain it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSolution {
    /// The bound's value.
    #[serde(rename = "B")]
    pub value: u64,
    /// The contact split `(x_0, .., x_k)`.
    pub x: Vec<u64>,
    /// The rounds charged at storage cost; the complement is charged at
    /// broadcast cost.
    #[serde(rename = "T1")]
    pub t1: BTreeSet<u32>,
}

fn require_nontrivial(params: &SystemParams) -> Result<(), CapacityError> {
    params.validate()?;
    if params.r >= params.k {
        return Err(CapacityError::TrivialRegime {
            r: params.r,
            k: params.k,
        });
    }
    Ok(())
}

/// Evaluates the bound objective for a given round subset and contact
/// split, validating feasibility first.
pub fn objective(
    params: &SystemParams,
    x: &[u64],
    t1: &BTreeSet<u32>,
) -> Result<u64, CapacityError> {
    params.validate()?;
    let k = params.k as usize;
    if x.len() != k + 1 {
        return Err(CapacityError::InfeasibleSolution {
            reason: format!("x has {} components, need k+1 = {}", x.len(), k + 1),
        });
    }
    if x[0] > params.n as u64 {
        return Err(CapacityError::InfeasibleSolution {
            reason: format!("x_0 = {} exceeds n = {}", x[0], params.n),
        });
    }
    for (s, &v) in x.iter().enumerate().skip(1) {
        if v > params.r as u64 {
            return Err(CapacityError::InfeasibleSolution {
                reason: format!("x_{s} = {v} exceeds r = {}", params.r),
            });
        }
    }
    let total: u64 = x.iter().sum();
    if total != params.k as u64 {
        return Err(CapacityError::InfeasibleSolution {
            reason: format!("components sum to {total}, need k = {}", params.k),
        });
    }
    if let Some(&bad) = t1.iter().find(|&&s| s < 1 || s > params.k) {
        return Err(CapacityError::InfeasibleSolution {
            reason: format!("T1 round {bad} outside 1..=k"),
        });
    }
    Ok(objective_unchecked(params, x, t1))
}

/// The objective with feasibility already established.  `d - prefix` never
/// underflows because the prefix sums are at most `k <= d`.
fn objective_unchecked(params: &SystemParams, x: &[u64], t1: &BTreeSet<u32>) -> u64 {
    let mut value: u128 = x[0] as u128 * params.alpha as u128;
    let mut prefix = x[0];
    for s in 1..=params.k {
        let xs = x[s as usize];
        if t1.contains(&s) {
            value += xs as u128 * params.alpha as u128;
        } else {
            value += (params.d as u64 - prefix) as u128 * params.beta as u128;
        }
        prefix += xs;
    }
    u64::try_from(value).unwrap_or(u64::MAX)
}

/// Visits every feasible contact split in lexicographic order.  With
/// `restricted`, components are limited to `{0, r}`.
fn for_each_split(params: &SystemParams, restricted: bool, f: &mut impl FnMut(&[u64])) {
    let k = params.k as usize;
    let mut x = vec![0u64; k + 1];

    fn rec(
        pos: usize,
        remaining: u64,
        params: &SystemParams,
        restricted: bool,
        x: &mut Vec<u64>,
        f: &mut impl FnMut(&[u64]),
    ) {
        let k = params.k as usize;
        let cap = if pos == 0 {
            params.n as u64
        } else {
            params.r as u64
        };
        if pos == k {
            let ok = remaining <= cap
                && (!restricted || remaining == 0 || remaining == params.r as u64);
            if ok {
                x[pos] = remaining;
                f(x);
            }
            return;
        }
        let mut v = 0u64;
        loop {
            if v > cap.min(remaining) {
                break;
            }
            x[pos] = v;
            rec(pos + 1, remaining - v, params, restricted, x, f);
            if restricted {
                if v == 0 && params.r as u64 <= cap.min(remaining) {
                    v = params.r as u64;
                } else {
                    break;
                }
            } else {
                v += 1;
            }
        }
    }

    rec(0, params.k as u64, params, restricted, &mut x, f);
}

fn minimize(params: &SystemParams, restricted: bool) -> Result<BoundSolution, CapacityError> {
    require_nontrivial(params)?;
    if restricted && params.k % params.r != 0 {
        return Err(CapacityError::DivisibilityRequired {
            r: params.r,
            k: params.k,
        });
    }
    let k = params.k;
    let mut best: Option<BoundSolution> = None;
    // Round subsets ordered by their bitmask (bit s-1 set means round s is
    // charged at storage cost); splits in lexicographic order inside each.
    // Ties keep the first solution found.
    for mask in 0u64..(1 << k) {
        let t1: BTreeSet<u32> = (1..=k).filter(|s| mask >> (s - 1) & 1 == 1).collect();
        for_each_split(params, restricted, &mut |x| {
            let value = objective_unchecked(params, x, &t1);
            if best.as_ref().map_or(true, |b| value < b.value) {
                best = Some(BoundSolution {
                    value,
                    x: x.to_vec(),
                    t1: t1.clone(),
                });
            }
        });
    }
    Ok(best.expect("x_0 = k is always feasible"))
}

/// The capacity bound by exhaustive minimization.  Ties are broken towards
/// the lexicographically smallest round-subset bitmask, then the
/// lexicographically smallest split vector.  Exponential in `k`; intended
/// as an exact oracle for small systems.
pub fn bound_b(params: &SystemParams) -> Result<BoundSolution, CapacityError> {
    minimize(params, false)
}

/// The capacity bound minimized over splits with components in `{0, r}`
/// only.  Requires `r | k`; in that case the optimum always lies in this
/// family, so the value agrees with [`bound_b`].
pub fn bound_b_restricted(params: &SystemParams) -> Result<BoundSolution, CapacityError> {
    minimize(params, true)
}

/// The closed form of the bound for `r | k`:
/// `sum_{j=1}^{k/r} min(r*alpha, (d - (j-1)*r) * beta)`.
pub fn closed_form(params: &SystemParams) -> Result<u64, CapacityError> {
    params.validate()?;
    if params.k % params.r != 0 {
        return Err(CapacityError::DivisibilityRequired {
            r: params.r,
            k: params.k,
        });
    }
    let u = (params.k / params.r) as u64;
    let mut total: u128 = 0;
    for j in 0..u {
        let storage = params.r as u128 * params.alpha as u128;
        let broadcast = (params.d as u64 - j * params.r as u64) as u128 * params.beta as u128;
        total += storage.min(broadcast);
    }
    Ok(u64::try_from(total).unwrap_or(u64::MAX))
}

/// A schedule built to pin the capacity at the bound: its designated
/// collector can draw exactly the bound's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorstCaseSchedule {
    pub instance: Instance,
    /// Stage at which the designated collector reads (always `k`).
    pub collector_stage: u32,
    /// The `k` nodes the designated collector contacts.
    pub collector: BTreeSet<NodeId>,
    /// The designated survivor sets `M_0, .., M_k`: `M_0` holds the
    /// never-failed initial nodes the collector reads, `M_s` the round-`s`
    /// newcomers it reads.
    pub designated: Vec<BTreeSet<NodeId>>,
}

/// Builds the deterministic worst-case schedule for an optimal solution of
/// the bound.
///
/// The failure pattern starves the designated collector: every round the
/// newcomers that are *not* designated fail next round, topped up with the
/// smallest-id initial nodes outside `M_0`, and helpers are drawn from the
/// designated sets first so that repairs recycle information the collector
/// already counts.  The horizon must be at least `k` (an unbounded horizon
/// produces exactly `k` rounds); rounds beyond `k` fail the previous
/// round's newcomers wholesale.
pub fn worst_case_schedule(
    params: &SystemParams,
    sol: &BoundSolution,
) -> Result<WorstCaseSchedule, CapacityError> {
    require_nontrivial(params)?;
    let actual = objective(params, &sol.x, &sol.t1)?;
    if actual != sol.value {
        return Err(CapacityError::SolutionMismatch {
            claimed: sol.value,
            actual,
        });
    }
    let k = params.k;
    let t = match params.horizon {
        Horizon::Finite(t) if t < k => return Err(CapacityError::HorizonTooShort { t, k }),
        Horizon::Finite(t) => t,
        Horizon::Unbounded => k,
    };

    let x0 = sol.x[0] as u32;
    // M_0: the x_0 largest initial ids; failures consume initials from the
    // bottom, so these never fail within the first k rounds.
    let m0: BTreeSet<NodeId> = (params.n - x0 + 1..=params.n).collect();
    let mut designated: Vec<BTreeSet<NodeId>> = vec![m0.clone()];
    let mut initial_pool: Vec<NodeId> = (1..=params.n - x0).collect();

    let mut rounds: Vec<RepairRound> = Vec::new();
    let mut active: BTreeSet<NodeId> = (1..=params.n).collect();
    for s in 1..=t {
        let failed: BTreeSet<NodeId> = if s == 1 {
            initial_pool.drain(..params.r as usize).collect()
        } else if s <= k {
            // Undesignated newcomers of the previous round, plus enough of
            // the lowest remaining initial ids to fail r nodes in total.
            let prev: BTreeSet<NodeId> = params
                .newcomers(s - 1)
                .difference(&designated[s as usize - 1])
                .copied()
                .collect();
            let top_up = params.r as usize - prev.len();
            prev.into_iter()
                .chain(initial_pool.drain(..top_up))
                .collect()
        } else {
            params.newcomers(s - 1)
        };

        let helpers: BTreeSet<NodeId> = {
            let mut chosen: Vec<NodeId> = Vec::new();
            let preferred = designated.iter().flatten().copied();
            let rest = active.iter().copied();
            for id in preferred.chain(rest) {
                if chosen.len() == params.d as usize {
                    break;
                }
                if active.contains(&id) && !failed.contains(&id) && !chosen.contains(&id) {
                    chosen.push(id);
                }
            }
            chosen.into_iter().collect()
        };

        for id in &failed {
            active.remove(id);
        }
        active.extend(params.newcomers(s));
        rounds.push(RepairRound { failed, helpers });

        if s <= k {
            // M_s: the x_s smallest newcomers of this round survive for the
            // designated collector.
            let xs = sol.x[s as usize] as usize;
            designated.push(params.newcomers(s).into_iter().take(xs).collect());
        }
    }

    let instance = Instance {
        params: SystemParams {
            horizon: Horizon::Finite(t),
            ..*params
        },
        rounds,
    };
    instance.validate()?;
    let collector: BTreeSet<NodeId> = designated.iter().flatten().copied().collect();
    Ok(WorstCaseSchedule {
        instance,
        collector_stage: k,
        collector,
        designated,
    })
}

impl WorstCaseSchedule {
    /// Max-flow from the source to the designated collector.
    pub fn designated_flow(&self) -> Result<u64, CapacityError> {
        let graph = FlowGraph::build(&self.instance)?;
        let (g, dc) = graph.with_collector(&self.instance, self.collector_stage, &self.collector)?;
        Ok(g.max_flow(g.source(), dc)?)
    }
}

/// The capacity at horizon `t` by brute force: the minimum of
/// [`instance_capacity`] over every schedule with `t` rounds.  `cap`
/// bounds the number of schedules enumerated (refusal, not truncation).
/// For `t >= k` this equals the bound; for smaller `t` it can only be
/// larger.
pub fn capacity_t(params: &SystemParams, t: u32, cap: u64) -> Result<u64, CapacityError> {
    require_nontrivial(params)?;
    let p = SystemParams {
        horizon: Horizon::Finite(t),
        ..*params
    };
    let mut best: Option<u64> = None;
    for inst in enumerate_instances(&p, cap)? {
        let c = instance_capacity(&inst)?;
        best = Some(best.map_or(c, |b| b.min(c)));
    }
    Ok(best.expect("at least one schedule"))
}
