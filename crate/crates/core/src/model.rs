//! System model: parameters, repair schedules, and exhaustive enumeration.
//!
//! A system starts with nodes `1..=n`, each storing `alpha` packets.  Nodes
//! fail in batches of `r` per repair round; in round `s` a set of `d`
//! surviving helpers each broadcast `beta` packets and the `r` newcomers
//! (with the fixed ids `n + (s-1)*r + 1 ..= n + s*r`) each store `alpha`.
//! An [`Instance`] pins down one concrete schedule of failures and helper
//! choices; capacity statements quantify over all of them, so this module
//! also provides deterministic, lexicographic enumeration of schedules and
//! of the `k`-node collector sets a reader may contact.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Storage nodes are identified by 1-based ids that never get reused:
/// round `s` newcomers are `n + (s-1)*r + 1 ..= n + s*r`.
pub type NodeId = u32;

/// Errors from parameter validation, schedule validation, or enumeration.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// A structural parameter that must be positive was zero.
    #[error("parameter {name} must be at least 1")]
    ZeroParam { name: &'static str },
    /// The helper count cannot exceed the nodes that survive a batch
    /// failure, i.e. `d <= n - r` must hold.
    #[error("d={d} helpers cannot be drawn from the n-r={survivors} nodes that survive a round")]
    TooFewSurvivors { d: u32, survivors: u32 },
    /// Repair must contact at least as many nodes as reconstruction,
    /// i.e. `d >= k` must hold.
    #[error("d={d} helpers per round is below the reconstruction size k={k}")]
    HelpersBelowReconstruction { d: u32, k: u32 },
    /// A schedule round violated a structural rule.
    #[error("round {round}: {reason}")]
    InvalidRound { round: u32, reason: String },
    /// The schedule length disagrees with the finite horizon `T`.
    #[error("schedule has {found} rounds but the horizon is T={expected}")]
    RoundCountMismatch { expected: u32, found: usize },
    /// A stage index points past the end of the schedule.
    #[error("stage {stage} exceeds the schedule length {rounds}")]
    StageOutOfRange { stage: u32, rounds: usize },
    /// Enumeration refused to start because it would exceed the cap.
    /// The count saturates at `u128::MAX` if it overflows.
    #[error("enumeration would yield {count} items, over the cap of {cap}")]
    EnumerationCapExceeded { count: u128, cap: u64 },
    /// An operation required a finite horizon.
    #[error("operation requires a finite horizon T")]
    UnboundedHorizon,
}

/// Number of repair rounds the system is analyzed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizon {
    /// Exactly `T` rounds.
    Finite(u32),
    /// No bound on the number of rounds.
    Unbounded,
}

impl Horizon {
    /// The finite value, or an error for [`Horizon::Unbounded`].
    pub fn finite(&self) -> Result<u32, ModelError> {
        match self {
            Horizon::Finite(t) => Ok(*t),
            Horizon::Unbounded => Err(ModelError::UnboundedHorizon),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Unbounded => write!(f, "unbounded"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => ser.serialize_u32(*t),
            Horizon::Unbounded => ser.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct HorizonVisitor;
        impl Visitor<'_> for HorizonVisitor {
            type Value = Horizon;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a round count or the string \"unbounded\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Horizon, E> {
                u32::try_from(v)
                    .map(Horizon::Finite)
                    .map_err(|_| E::custom(format!("horizon {v} exceeds u32")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Horizon, E> {
                if v == "unbounded" {
                    Ok(Horizon::Unbounded)
                } else {
                    Err(E::custom(format!("expected \"unbounded\", got {v:?}")))
                }
            }
        }
        de.deserialize_any(HorizonVisitor)
    }
}

/// The structural parameters of a storage system with batch repair.
///
/// `alpha` (per-node storage) and `beta` (per-helper broadcast budget) are
/// packet counts; either may be zero, which degenerates gracefully (a
/// `beta = 0` system can never repair usefully, an `alpha = 0` system
/// stores nothing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    /// Initial number of storage nodes.
    pub n: u32,
    /// Any `k` active nodes must suffice to reconstruct the file.
    pub k: u32,
    /// Helpers contacted per repair round.
    pub d: u32,
    /// Nodes that fail (and are replaced) per round.
    pub r: u32,
    /// Packets stored per node.
    pub alpha: u64,
    /// Packets broadcast per helper per round.
    pub beta: u64,
    /// Number of repair rounds.
    #[serde(rename = "T")]
    pub horizon: Horizon,
}

impl SystemParams {
    /// Checks the structural constraints: `n, k, d, r >= 1`, `d >= k`
    /// (repair contacts at least a reconstruction set), and `n - r >= d`
    /// (enough survivors to act as helpers).
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("n", self.n), ("k", self.k), ("d", self.d), ("r", self.r)] {
            if v == 0 {
                return Err(ModelError::ZeroParam { name });
            }
        }
        if self.d < self.k {
            return Err(ModelError::HelpersBelowReconstruction {
                d: self.d,
                k: self.k,
            });
        }
        if self.n < self.r || self.n - self.r < self.d {
            return Err(ModelError::TooFewSurvivors {
                d: self.d,
                survivors: self.n.saturating_sub(self.r),
            });
        }
        Ok(())
    }

    /// Ids of the newcomers that join in round `s >= 1`.
    pub fn newcomers(&self, s: u32) -> BTreeSet<NodeId> {
        let base = self.n + (s - 1) * self.r;
        (base + 1..=base + self.r).collect()
    }
}

/// One repair round: which `r` active nodes fail and which `d` survivors
/// act as helpers.  The newcomer ids are implied by the round index and are
/// not stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRound {
    /// The `r` nodes that fail at the start of the round.
    pub failed: BTreeSet<NodeId>,
    /// The `d` surviving nodes that broadcast repair packets.
    pub helpers: BTreeSet<NodeId>,
}

/// A concrete schedule: system parameters plus one repair round per stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub params: SystemParams,
    pub rounds: Vec<RepairRound>,
}

impl Instance {
    /// Validates the parameters and every round of the schedule: exactly
    /// `r` active nodes fail, exactly `d` survivors help, and (for a finite
    /// horizon) the schedule length equals `T`.  An unbounded horizon
    /// accepts any finite prefix of rounds.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.validate()?;
        if let Horizon::Finite(t) = self.params.horizon {
            if self.rounds.len() != t as usize {
                return Err(ModelError::RoundCountMismatch {
                    expected: t,
                    found: self.rounds.len(),
                });
            }
        }
        let mut active: BTreeSet<NodeId> = (1..=self.params.n).collect();
        for (idx, round) in self.rounds.iter().enumerate() {
            let s = idx as u32 + 1;
            let fail = |reason: String| ModelError::InvalidRound { round: s, reason };
            if round.failed.len() != self.params.r as usize {
                return Err(fail(format!(
                    "{} nodes fail but r={}",
                    round.failed.len(),
                    self.params.r
                )));
            }
            if let Some(&bad) = round.failed.iter().find(|id| !active.contains(id)) {
                return Err(fail(format!("failed node {bad} is not active")));
            }
            if round.helpers.len() != self.params.d as usize {
                return Err(fail(format!(
                    "{} helpers but d={}",
                    round.helpers.len(),
                    self.params.d
                )));
            }
            if let Some(&bad) = round.helpers.iter().find(|id| round.failed.contains(id)) {
                return Err(fail(format!("helper {bad} fails in the same round")));
            }
            if let Some(&bad) = round.helpers.iter().find(|id| !active.contains(id)) {
                return Err(fail(format!("helper {bad} is not active")));
            }
            for id in &round.failed {
                active.remove(id);
            }
            active.extend(self.params.newcomers(s));
        }
        Ok(())
    }

    /// The active node set after stage `s` (stage 0 is the initial state).
    /// Always has exactly `n` elements for a valid schedule.
    pub fn active_after(&self, s: u32) -> Result<BTreeSet<NodeId>, ModelError> {
        if s as usize > self.rounds.len() {
            return Err(ModelError::StageOutOfRange {
                stage: s,
                rounds: self.rounds.len(),
            });
        }
        let mut active: BTreeSet<NodeId> = (1..=self.params.n).collect();
        for (idx, round) in self.rounds.iter().take(s as usize).enumerate() {
            for id in &round.failed {
                active.remove(id);
            }
            active.extend(self.params.newcomers(idx as u32 + 1));
        }
        Ok(active)
    }
}

/// Exact binomial coefficient in u128, saturating on overflow.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of distinct schedules for these parameters, saturating at
/// `u128::MAX`.  Each round independently picks `r` failures out of `n`
/// active nodes and `d` helpers out of the `n - r` survivors.
pub fn instance_count(params: &SystemParams) -> Result<u128, ModelError> {
    params.validate()?;
    let t = params.horizon.finite()?;
    let per_round = binomial(params.n as u64, params.r as u64)
        .saturating_mul(binomial((params.n - params.r) as u64, params.d as u64));
    let mut acc: u128 = 1;
    for _ in 0..t {
        acc = acc.saturating_mul(per_round);
    }
    Ok(acc)
}

/// Enumerates every valid schedule in lexicographic order (per round:
/// failure set, then helper set, both as sorted id lists).  Refuses with
/// [`ModelError::EnumerationCapExceeded`] if the schedule count exceeds
/// `cap`.
pub fn enumerate_instances(params: &SystemParams, cap: u64) -> Result<InstanceIter, ModelError> {
    let count = instance_count(params)?;
    if count > cap as u128 {
        return Err(ModelError::EnumerationCapExceeded { count, cap });
    }
    Ok(InstanceIter {
        params: *params,
        t: params.horizon.finite()? as usize,
        levels: Vec::new(),
        started: false,
        done: false,
    })
}

/// Enumerates the `k`-subsets of the nodes active after stage `s`, in
/// lexicographic order.  These are the collector sets a reader may contact.
pub fn enumerate_collectors(
    instance: &Instance,
    s: u32,
) -> Result<impl Iterator<Item = BTreeSet<NodeId>>, ModelError> {
    let active: Vec<NodeId> = instance.active_after(s)?.into_iter().collect();
    let k = instance.params.k as usize;
    let mut comb = Comb::new(active.len(), k);
    Ok(std::iter::from_fn(move || {
        let sel = comb.next()?;
        Some(sel.iter().map(|&i| active[i]).collect())
    }))
}

/// Lexicographic k-subset index generator.
#[derive(Debug)]
struct Comb {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    fresh: bool,
    done: bool,
}

impl Comb {
    fn new(n: usize, k: usize) -> Self {
        Comb {
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
        // Advance the rightmost index that still has room, reset the tail.
        let mut i = self.k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - self.k + i {
                self.idx[i] += 1;
                for j in i + 1..self.k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}

/// Lazy lexicographic iterator over all valid schedules.
#[derive(Debug)]
pub struct InstanceIter {
    params: SystemParams,
    t: usize,
    levels: Vec<Level>,
    started: bool,
    done: bool,
}

#[derive(Debug)]
struct Level {
    /// Active set entering this round, sorted.
    active: Vec<NodeId>,
    failed_sel: Comb,
    failed: Vec<NodeId>,
    helper_sel: Comb,
    helpers: Vec<NodeId>,
}

impl Level {
    /// Builds the level positioned at its first (failure, helper) choice.
    fn first(params: &SystemParams, active: Vec<NodeId>) -> Level {
        let mut failed_sel = Comb::new(active.len(), params.r as usize);
        let failed: Vec<NodeId> = failed_sel
            .next()
            .expect("r <= n")
            .iter()
            .map(|&i| active[i])
            .collect();
        let survivors: Vec<NodeId> = active
            .iter()
            .copied()
            .filter(|id| !failed.contains(id))
            .collect();
        let mut helper_sel = Comb::new(survivors.len(), params.d as usize);
        let helpers: Vec<NodeId> = helper_sel
            .next()
            .expect("d <= n - r")
            .iter()
            .map(|&i| survivors[i])
            .collect();
        Level {
            active,
            failed_sel,
            failed,
            helper_sel,
            helpers,
        }
    }

    /// Moves to the next (failure, helper) choice within this round.
    fn advance(&mut self, params: &SystemParams) -> bool {
        let survivors: Vec<NodeId> = self
            .active
            .iter()
            .copied()
            .filter(|id| !self.failed.contains(id))
            .collect();
        if let Some(sel) = self.helper_sel.next() {
            self.helpers = sel.iter().map(|&i| survivors[i]).collect();
            return true;
        }
        if let Some(sel) = self.failed_sel.next() {
            self.failed = sel.iter().map(|&i| self.active[i]).collect();
            let survivors: Vec<NodeId> = self
                .active
                .iter()
                .copied()
                .filter(|id| !self.failed.contains(id))
                .collect();
            self.helper_sel = Comb::new(survivors.len(), params.d as usize);
            self.helpers = self
                .helper_sel
                .next()
                .expect("d <= n - r")
                .iter()
                .map(|&i| survivors[i])
                .collect();
            return true;
        }
        false
    }

    /// Active set after this round, given the current failure choice.
    fn active_after(&self, params: &SystemParams, round: u32) -> Vec<NodeId> {
        let mut next: BTreeSet<NodeId> = self.active.iter().copied().collect();
        for id in &self.failed {
            next.remove(id);
        }
        next.extend(params.newcomers(round));
        next.into_iter().collect()
    }
}

impl InstanceIter {
    fn fill_from(&mut self, depth: usize) {
        for lvl in depth..self.t {
            let active = if lvl == 0 {
                (1..=self.params.n).collect()
            } else {
                self.levels[lvl - 1].active_after(&self.params, lvl as u32)
            };
            self.levels.push(Level::first(&self.params, active));
        }
    }

    fn current(&self) -> Instance {
        Instance {
            params: self.params,
            rounds: self
                .levels
                .iter()
                .map(|lvl| RepairRound {
                    failed: lvl.failed.iter().copied().collect(),
                    helpers: lvl.helpers.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

impl Iterator for InstanceIter {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
            return Some(self.current());
        }
        // Odometer: advance the deepest level that still has choices, then
        // rebuild everything below it.
        let mut depth = self.t;
        loop {
            if depth == 0 {
                self.done = true;
                return None;
            }
            depth -= 1;
            if self.levels[depth].advance(&self.params) {
                self.levels.truncate(depth + 1);
                self.fill_from(depth + 1);
                return Some(self.current());
            }
        }
    }
}
