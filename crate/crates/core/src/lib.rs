//! Capacity analysis and repair simulation for distributed storage systems
//! that repair batches of failed nodes over a broadcast channel.
//!
//! The crate models a storage system of `n` nodes holding a file in coded
//! form.  Nodes fail `r` at a time; each repair round, `d` surviving helpers
//! each broadcast `beta` coded packets, and every one of the `r` newcomers
//! receives all `d * beta` packets and stores `alpha`.  The modules build on
//! each other roughly bottom-up:
//!
//! - [`galois`]: exact finite-field arithmetic and rank/span queries;
//! - [`model`]: system parameters, repair schedules, and enumeration;
//! - [`flowgraph`]: information flow graphs, cuts, and exact max-flow;
//! - [`capacity`]: the storage-capacity bound, its optimizers, and the
//!   worst-case schedule that attains it;
//! - [`netcode`]: concrete coding schemes (random and deterministic) run
//!   over a schedule, with decodability and genericity checks;
//! - [`tradeoff`]: the storage/repair-bandwidth tradeoff curve and its
//!   extreme points.

pub mod capacity;
pub mod flowgraph;
pub mod galois;
pub mod model;
pub mod netcode;
pub mod tradeoff;

pub use capacity::{
    bound_b, bound_b_restricted, capacity_t, closed_form, objective, worst_case_schedule,
    BoundSolution, CapacityError, WorstCaseSchedule,
};
pub use flowgraph::{
    instance_capacity, CapEdge, CutTerms, CutValue, EdgeCap, FlowError, FlowGraph, StagedEdgeKey,
    StagedGraph, VertexRole,
};
pub use galois::{Field, FieldMatrix, FieldSpec, GaloisError};
pub use model::{Horizon, Instance, ModelError, NodeId, RepairRound, SystemParams};
pub use netcode::{
    generic_field_bound, CodeState, DecodeCell, NetcodeError, RlncPolicy, StageMode, StageRecord,
};
pub use tradeoff::{
    cooperative_repair_bandwidth, curve_alpha, dominance_report, exact, ms_mt_points,
    repair_transmission_bandwidth, round3, tradeoff_curve, DominanceReport, PointLabel, Rat,
    RepairBandwidth, Scheme, TradeoffError, TradeoffPoint,
};
