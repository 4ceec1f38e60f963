//! The storage / repair-bandwidth tradeoff, normalized to file size 1.
//!
//! With the file size pinned to 1, a system design is a point `(tau,
//! alpha)`: the repair-transmission bandwidth per newcomer (`tau = d*beta
//! / r` — broadcast packets are counted once, however many newcomers hear
//! them) against per-node storage.  The feasible region is bounded by a
//! piecewise-linear curve obtained by inverting the capacity closed form
//! at capacity 1; its two corners are the minimum-storage point (smallest
//! `alpha`, then smallest `tau`) and the minimum-transmission point
//! (smallest `tau`, where `alpha = tau`).
//!
//! Everything here is exact `i64` rational arithmetic; decimals appear
//! only through [`round3`] at the output boundary.  For comparison, the
//! same two corner points are provided for cooperative repair (newcomers
//! download from helpers individually and exchange among themselves);
//! batching repairs over broadcast strictly beats it at both corners
//! whenever more than one node is repaired at a time.

use num_rational::Ratio;
use thiserror::Error;

use crate::model::{ModelError, SystemParams};

/// Exact rational used throughout the tradeoff computations.
pub type Rat = Ratio<i64>;

/// Errors from tradeoff evaluation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TradeoffError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// The nontrivial tradeoff needs `1 <= r < k`.
    #[error("need 1 <= r < k (r={r}, k={k})")]
    RegimeViolation { r: u32, k: u32 },
    /// Helpers must be able to reconstruct: `d >= k`.
    #[error("need d >= k (d={d}, k={k})")]
    DimensionOrder { d: u32, k: u32 },
    /// The curve inversion uses the closed capacity form, so `r | k`.
    #[error("this form requires r to divide k (r={r}, k={k})")]
    DivisibilityRequired { r: u32, k: u32 },
    /// No storage level reaches capacity 1 at this bandwidth.
    #[error("repair bandwidth {tau} is below the minimum-transmission point")]
    InfeasibleBandwidth { tau: Rat },
    /// A curve needs at least its two endpoints.
    #[error("need at least 2 samples, got {samples}")]
    TooFewSamples { samples: usize },
    /// Parameters too large for exact `i64` rationals.
    #[error("{what} does not fit the exact rational range")]
    ValueOutOfRange { what: &'static str },
}

/// Which corner of which scheme a point describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLabel {
    /// Minimum-storage corner, broadcast batch repair.
    MsBroadcast,
    /// Minimum-transmission corner, broadcast batch repair.
    MtBroadcast,
    /// Minimum-storage corner, cooperative repair.
    MsCooperative,
    /// Minimum-transmission corner, cooperative repair.
    MtCooperative,
    /// Interior sample of the broadcast tradeoff curve.
    Curve,
}

impl std::fmt::Display for PointLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointLabel::MsBroadcast => "MSB",
            PointLabel::MtBroadcast => "MTB",
            PointLabel::MsCooperative => "MSC",
            PointLabel::MtCooperative => "MTC",
            PointLabel::Curve => "curve",
        })
    }
}

/// One normalized design point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradeoffPoint {
    pub tau: Rat,
    pub alpha: Rat,
    pub label: PointLabel,
}

/// Repair scheme selector for the corner-point formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Helpers broadcast; every newcomer hears every packet.
    Broadcast,
    /// Newcomers download individually, then exchange among themselves.
    Cooperative,
}

/// Per-newcomer repair-transmission bandwidth of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairBandwidth {
    pub tau: Rat,
    /// Set when `r >= k`: the broadcasts alone rebuild the whole file, so
    /// `tau` is capacity over `r` rather than `d*beta / r`.
    pub trivial: bool,
}

fn rat_u64(value: u64, what: &'static str) -> Result<Rat, TradeoffError> {
    i64::try_from(value)
        .map(Rat::from_integer)
        .map_err(|_| TradeoffError::ValueOutOfRange { what })
}

fn check_regime(k: u32, d: u32, r: u32, divisible: bool) -> Result<(), TradeoffError> {
    if r < 1 || r >= k {
        return Err(TradeoffError::RegimeViolation { r, k });
    }
    if d < k {
        return Err(TradeoffError::DimensionOrder { d, k });
    }
    if divisible && k % r != 0 {
        return Err(TradeoffError::DivisibilityRequired { r, k });
    }
    Ok(())
}

/// The number of packet transmissions per newcomer: `d*beta / r` (each
/// broadcast serves all `r` newcomers at once).  For `r >= k` the
/// interesting rate is capacity over `r`, flagged as trivial.
pub fn repair_transmission_bandwidth(params: &SystemParams) -> Result<RepairBandwidth, TradeoffError> {
    params.validate()?;
    let r = Rat::from_integer(params.r as i64);
    if params.r >= params.k {
        let cap = (params.k as u64 * params.alpha).min(params.d as u64 * params.beta);
        return Ok(RepairBandwidth {
            tau: rat_u64(cap, "capacity")? / r,
            trivial: true,
        });
    }
    let traffic = rat_u64(params.d as u64 * params.beta, "d*beta")?;
    Ok(RepairBandwidth {
        tau: traffic / r,
        trivial: false,
    })
}

/// Per-newcomer transmissions under cooperative repair: `beta_download`
/// from each of `d` helpers plus `beta_exchange` from each of the other
/// `r - 1` newcomers, nothing shared over the air.
pub fn cooperative_repair_bandwidth(
    d: u32,
    r: u32,
    beta_download: u64,
    beta_exchange: u64,
) -> Result<Rat, TradeoffError> {
    if r < 1 {
        return Err(TradeoffError::RegimeViolation { r, k: u32::MAX });
    }
    let total = d as u128 * beta_download as u128 + (r as u128 - 1) * beta_exchange as u128;
    let total = u64::try_from(total).map_err(|_| TradeoffError::ValueOutOfRange {
        what: "cooperative traffic",
    })?;
    rat_u64(total, "cooperative traffic")
}

/// The minimum-storage and minimum-transmission corner points of a scheme,
/// as exact rationals (file size 1).
pub fn ms_mt_points(
    k: u32,
    d: u32,
    r: u32,
    scheme: Scheme,
) -> Result<(TradeoffPoint, TradeoffPoint), TradeoffError> {
    check_regime(k, d, r, matches!(scheme, Scheme::Broadcast))?;
    let (k, d, r) = (k as i64, d as i64, r as i64);
    let (ms, mt) = match scheme {
        Scheme::Broadcast => (
            TradeoffPoint {
                tau: Rat::new(d, k * (d + r - k)),
                alpha: Rat::new(1, k),
                label: PointLabel::MsBroadcast,
            },
            TradeoffPoint {
                tau: Rat::new(2 * d, k * (2 * d + r - k)),
                alpha: Rat::new(2 * d, k * (2 * d + r - k)),
                label: PointLabel::MtBroadcast,
            },
        ),
        Scheme::Cooperative => (
            TradeoffPoint {
                tau: Rat::new(d + r - 1, k * (d + r - k)),
                alpha: Rat::new(1, k),
                label: PointLabel::MsCooperative,
            },
            TradeoffPoint {
                tau: Rat::new(2 * d + r - 1, k * (2 * d + r - k)),
                alpha: Rat::new(2 * d + r - 1, k * (2 * d + r - k)),
                label: PointLabel::MtCooperative,
            },
        ),
    };
    Ok((ms, mt))
}

/// The smallest per-node storage reaching capacity 1 at repair bandwidth
/// `tau`, solved exactly on the capacity form's piecewise-linear segments.
///
/// With `beta = r*tau / d` fixed, capacity as a function of `alpha` is a
/// sum of `u = k/r` terms `min(r*alpha, (d-(j-1)r)*beta)`.  Trying `t =
/// u, .., 1` terms still on their linear part (the rest saturated) gives
/// one consistent segment; if even full saturation stays below 1 the
/// bandwidth is infeasible.
pub fn curve_alpha(k: u32, d: u32, r: u32, tau: Rat) -> Result<Rat, TradeoffError> {
    check_regime(k, d, r, true)?;
    let u = (k / r) as i64;
    let (d, r) = (d as i64, r as i64);
    let beta = tau * Rat::new(r, d);
    // Suffix sum of the saturated terms j = t+1..u.
    let mut saturated = Rat::from_integer(0);
    for t in (1..=u).rev() {
        let alpha = (Rat::from_integer(1) - saturated) / Rat::from_integer(t * r);
        let supply = Rat::from_integer(r) * alpha;
        let own_cap = Rat::from_integer(d - (t - 1) * r) * beta;
        let next_cap = Rat::from_integer(d - t * r) * beta;
        if supply <= own_cap && (t == u || supply >= next_cap) {
            return Ok(alpha);
        }
        saturated += own_cap;
    }
    Err(TradeoffError::InfeasibleBandwidth { tau })
}

/// Samples the broadcast tradeoff curve on an even `tau` grid from the
/// minimum-transmission corner to the minimum-storage corner.
pub fn tradeoff_curve(
    k: u32,
    d: u32,
    r: u32,
    samples: usize,
) -> Result<Vec<TradeoffPoint>, TradeoffError> {
    if samples < 2 {
        return Err(TradeoffError::TooFewSamples { samples });
    }
    let (ms, mt) = ms_mt_points(k, d, r, Scheme::Broadcast)?;
    let span = ms.tau - mt.tau;
    (0..samples)
        .map(|i| {
            let tau = mt.tau + span * Rat::new(i as i64, samples as i64 - 1);
            Ok(TradeoffPoint {
                tau,
                alpha: curve_alpha(k, d, r, tau)?,
                label: PointLabel::Curve,
            })
        })
        .collect()
}

/// How far the broadcast corners sit left of the cooperative corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominanceReport {
    pub broadcast_ms: TradeoffPoint,
    pub broadcast_mt: TradeoffPoint,
    pub cooperative_ms: TradeoffPoint,
    pub cooperative_mt: TradeoffPoint,
    /// `tau_MSC - tau_MSB`, always `(r-1) / (k(d+r-k))`.
    pub ms_gap: Rat,
    /// `tau_MTC - tau_MTB`, always `(r-1) / (k(2d+r-k))`.
    pub mt_gap: Rat,
    /// Gaps are strictly positive exactly when `r > 1`.
    pub strict: bool,
}

/// Compares the broadcast and cooperative corner points at equal storage.
pub fn dominance_report(k: u32, d: u32, r: u32) -> Result<DominanceReport, TradeoffError> {
    let (broadcast_ms, broadcast_mt) = ms_mt_points(k, d, r, Scheme::Broadcast)?;
    let (cooperative_ms, cooperative_mt) = ms_mt_points(k, d, r, Scheme::Cooperative)?;
    Ok(DominanceReport {
        broadcast_ms,
        broadcast_mt,
        cooperative_ms,
        cooperative_mt,
        ms_gap: cooperative_ms.tau - broadcast_ms.tau,
        mt_gap: cooperative_mt.tau - broadcast_mt.tau,
        strict: r > 1,
    })
}

/// Renders an exact rational with exactly three decimals (ties away from
/// zero).  Output-boundary only; comparisons stay exact.
pub fn round3(value: Rat) -> String {
    let scaled = (value * Rat::from_integer(1000)).round().to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let scaled = scaled.abs();
    format!("{sign}{}.{:03}", scaled / 1000, scaled % 1000)
}

/// Renders an exact rational as `p/q` (always with the denominator).
pub fn exact(value: Rat) -> String {
    format!("{}/{}", value.numer(), value.denom())
}
