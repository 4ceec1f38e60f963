//! Shared fixtures for the benchmark targets: the canonical parameter
//! sets and a prebuilt adversarial schedule, so every bench measures the
//! kernel and not fixture construction.

use brcap_core::{bound_b, worst_case_schedule, Horizon, Instance, SystemParams};

/// The worked eight-node parameter set: n=8, k=3, d=4, r=2, alpha=2,
/// beta=1 over two rounds.
pub fn desk_params() -> SystemParams {
    SystemParams {
        n: 8,
        k: 3,
        d: 4,
        r: 2,
        alpha: 2,
        beta: 1,
        horizon: Horizon::Finite(2),
    }
}

/// The four-node capacity-pinning parameter set over three rounds.
pub fn small_params() -> SystemParams {
    SystemParams {
        n: 4,
        k: 2,
        d: 2,
        r: 1,
        alpha: 2,
        beta: 1,
        horizon: Horizon::Finite(3),
    }
}

/// The adversarial schedule for [`small_params`], built from the optimal
/// bound solution.
pub fn adversarial_instance() -> Instance {
    let p = small_params();
    let sol = bound_b(&p).expect("analysis regime");
    worst_case_schedule(&p, &sol)
        .expect("schedule construction succeeds")
        .instance
}
