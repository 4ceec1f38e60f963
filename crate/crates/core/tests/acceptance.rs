//! Acceptance gate: one test per shipping criterion, each printing a
//! single pass/fail line (visible under `--nocapture`) with its runtime.
//! Budgets and tolerances are pinned here; nothing is tuned at run time.

mod common;

use std::collections::BTreeSet;
use std::panic::AssertUnwindSafe;
use std::time::{Duration, Instant};

use brcap_core::{
    bound_b, bound_b_restricted, capacity_t, closed_form, dominance_report, instance_capacity,
    ms_mt_points, objective, round3, worst_case_schedule, CodeState, CutValue, Field, FlowGraph,
    Horizon, Instance, Rat, Scheme, StageMode, SystemParams, VertexRole, WorstCaseSchedule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn criterion(n: u32, name: &str, budget: Option<Duration>, body: impl FnOnce()) {
    let start = Instant::now();
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match result {
        Ok(()) => {
            if let Some(limit) = budget {
                if elapsed > limit {
                    println!("criterion {n} ({name}): FAIL ({elapsed:.2?} over the {limit:?} budget)");
                    panic!("criterion {n} exceeded its {limit:?} budget: took {elapsed:?}");
                }
            }
            println!("criterion {n} ({name}): PASS ({elapsed:.2?})");
        }
        Err(cause) => {
            println!("criterion {n} ({name}): FAIL ({elapsed:.2?})");
            std::panic::resume_unwind(cause);
        }
    }
}

/// The worked eight-node schedule: n=8, k=3, d=4, r=2, alpha=2, beta=1,
/// two rounds.
fn worked_schedule() -> Instance {
    let instance = Instance {
        params: common::params(8, 3, 4, 2, 2, 1, 2),
        rounds: vec![
            brcap_core::RepairRound {
                failed: BTreeSet::from([1, 2]),
                helpers: BTreeSet::from([3, 4, 5, 6]),
            },
            brcap_core::RepairRound {
                failed: BTreeSet::from([5, 6]),
                helpers: BTreeSet::from([3, 4, 7, 9]),
            },
        ],
    };
    instance.validate().unwrap();
    instance
}

/// The four-node capacity-pinning schedule over three rounds, built from
/// the optimal bound solution.
fn pinning_schedule() -> WorstCaseSchedule {
    let p = common::params(4, 2, 2, 1, 2, 1, 3);
    let sol = bound_b(&p).unwrap();
    worst_case_schedule(&p, &sol).unwrap()
}

#[test]
fn criterion_1_bound_reproduction() {
    criterion(1, "bound reproduction", Some(Duration::from_secs(1)), || {
        let p = common::params(8, 3, 4, 2, 2, 1, 2);
        let sol = bound_b(&p).unwrap();
        assert_eq!(sol.value, 5);
        // A known alternative optimum — one round-1 newcomer and two
        // round-2 newcomers charged at storage cost — reaches the same
        // value, so the returned optimum is equivalent.
        let alt = objective(&p, &[0, 1, 2, 0], &BTreeSet::from([1, 3])).unwrap();
        assert_eq!(alt, sol.value);
    });
}

#[test]
fn criterion_2_symbolic_cut_accounting() {
    criterion(2, "symbolic cut accounting", Some(Duration::from_secs(1)), || {
        let instance = worked_schedule();
        let g = FlowGraph::build(&instance).unwrap();
        let (g, dc) = g
            .with_collector(&instance, 2, &BTreeSet::from([9, 11, 12]))
            .unwrap();
        let vid = |role: &VertexRole| g.vertex_id(role).unwrap();

        // Cut 1: the source side holds every initial node pair.  All seven
        // helper broadcasts cross (four in round 1, three in round 2 — the
        // fourth round-2 helper is itself a newcomer).
        let mut x1 = BTreeSet::from([g.source()]);
        for node in 1..=8 {
            x1.insert(vid(&VertexRole::In { node }));
            x1.insert(vid(&VertexRole::Out { node, stage: None }));
        }
        let cut1 = g.cut_value(&x1, dc).unwrap();
        assert_eq!(cut1.to_string(), "7β");
        match &cut1 {
            CutValue::Finite(t) => {
                assert_eq!((t.alphas, t.betas, t.units), (0, 7, 0));
                assert_eq!(t.eval(2, 1), 7);
            }
            CutValue::Infinite => panic!("cut 1 must be finite"),
        }

        // Cut 2: additionally absorb round 1 — its helper relays and both
        // newcomer inputs, one newcomer fully.  The stored copy of the
        // half-absorbed newcomer crosses at storage capacity, and the
        // three surviving round-2 broadcasts cross at broadcast capacity.
        let mut x2 = x1.clone();
        for helper in [3, 4, 5, 6] {
            x2.insert(vid(&VertexRole::Aux { helper, round: 1 }));
        }
        x2.insert(vid(&VertexRole::In { node: 9 }));
        x2.insert(vid(&VertexRole::In { node: 10 }));
        x2.insert(vid(&VertexRole::Out { node: 10, stage: None }));
        let cut2 = g.cut_value(&x2, dc).unwrap();
        assert_eq!(cut2.to_string(), "α+3β");
        match &cut2 {
            CutValue::Finite(t) => {
                assert_eq!((t.alphas, t.betas, t.units), (1, 3, 0));
                assert_eq!(t.eval(2, 1), 5);
            }
            CutValue::Infinite => panic!("cut 2 must be finite"),
        }
    });
}

#[test]
fn criterion_3_capacity_tightness() {
    criterion(3, "capacity tightness", Some(Duration::from_secs(30)), || {
        let p = common::params(4, 2, 2, 1, 2, 1, 2);
        let seq: Vec<u64> = (0..=3)
            .map(|t| capacity_t(&p, t, 1_000_000).unwrap())
            .collect();
        assert_eq!(seq[0], 4);
        assert!(seq.windows(2).all(|w| w[1] <= w[0]), "sequence {seq:?}");
        assert_eq!(seq[2], 3);
        assert_eq!(seq[3], 3);

        let sol = bound_b(&p).unwrap();
        assert_eq!(sol.value, 3);
        for t in [2u32, 3] {
            let pt = SystemParams {
                horizon: Horizon::Finite(t),
                ..p
            };
            let wc = worst_case_schedule(&pt, &sol).unwrap();
            assert_eq!(wc.designated_flow().unwrap(), 3);
            assert_eq!(instance_capacity(&wc.instance).unwrap(), 3);
        }
    });
}

#[test]
fn criterion_4_closed_form_consistency() {
    criterion(4, "closed-form consistency", Some(Duration::from_secs(60)), || {
        for k in [2u32, 4, 6] {
            for r in (1..k).filter(|r| k % r == 0) {
                for d in k..=k + 4 {
                    let n = d + r;
                    for alpha in 0..=3u64 {
                        for beta in 0..=3u64 {
                            let p = common::params(n, k, d, r, alpha, beta, k);
                            let full = bound_b(&p).unwrap().value;
                            let pruned = bound_b_restricted(&p).unwrap().value;
                            let closed = closed_form(&p).unwrap();
                            assert_eq!(full, pruned, "restricted mismatch at {p:?}");
                            assert_eq!(full, closed, "closed-form mismatch at {p:?}");
                        }
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_5_corner_point_figures() {
    criterion(5, "corner-point figures", None, || {
        let (ms, mt) = ms_mt_points(4, 9, 2, Scheme::Broadcast).unwrap();
        assert_eq!(ms.tau, Rat::new(9, 28));
        assert_eq!(ms.alpha, Rat::new(1, 4));
        assert_eq!(mt.tau, Rat::new(9, 32));
        assert_eq!(mt.alpha, Rat::new(9, 32));
        assert_eq!(round3(ms.tau), "0.321");
        assert_eq!(round3(ms.alpha), "0.250");
        assert_eq!(round3(mt.tau), "0.281");
        assert_eq!(round3(mt.alpha), "0.281");

        let report = dominance_report(4, 9, 2).unwrap();
        assert_eq!(report.ms_gap, Rat::new(1, 28));
        assert_eq!(report.mt_gap, Rat::new(1, 64));
        assert!(report.ms_gap > Rat::from_integer(0));
        assert!(report.mt_gap > Rat::from_integer(0));
        assert!(report.strict);
        assert_eq!(round3(report.cooperative_ms.tau), "0.357");
    });
}

#[test]
fn criterion_6_deterministic_achievability() {
    criterion(6, "deterministic achievability", Some(Duration::from_secs(60)), || {
        let wc = pinning_schedule();

        // At the capacity dimension, every collector at every stage
        // decodes, with every stage assigned deterministically.
        let mut state =
            CodeState::init_source(&wc.instance, Field::prime(47).unwrap(), 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..3 {
            state.generic_round(1 << 20, &mut rng).unwrap();
        }
        for record in &state.history()[1..] {
            assert_eq!(record.mode, StageMode::Deterministic);
        }
        for cell in state.decode_matrix().unwrap() {
            assert!(
                cell.ok,
                "stage {} collector {:?} failed to decode",
                cell.stage, cell.collector
            );
        }

        // One dimension above capacity cannot pass the 3-packet
        // bottleneck of the designated collector, whatever the code does.
        let mut over =
            CodeState::init_source(&wc.instance, Field::prime(127).unwrap(), 4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..3 {
            over.generic_round(1 << 20, &mut rng).unwrap();
        }
        assert!(!over
            .check_decodable(wc.collector_stage, &wc.collector)
            .unwrap());
        assert!(over.decode_matrix().unwrap().iter().any(|c| !c.ok));
    });
}

#[test]
fn criterion_7_stage_regularity() {
    criterion(7, "stage regularity", Some(Duration::from_secs(120)), || {
        let wc = pinning_schedule();
        let mut state =
            CodeState::init_source(&wc.instance, Field::prime(47).unwrap(), 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..3 {
            state.generic_round(1 << 20, &mut rng).unwrap();
        }
        for s in -1..=3 {
            assert!(
                state.check_generic_property(s, 1 << 20).unwrap(),
                "independence failed at stage {s}"
            );
        }
    });
}

#[test]
fn criterion_8_random_coding_statistics() {
    criterion(8, "random-coding statistics", None, || {
        // 100 a-priori seeds (0..100) over GF(2^8); a trial counts as a
        // full decode when every collector at the final stage recovers
        // the whole file.  That is the event the 99-of-100 threshold is
        // calibrated for: measured per-trial failure is ~0.7-1.5% at this
        // field size (the adversarial schedule keeps several final-stage
        // cuts exactly at the code dimension), so one miss is within
        // expectation.  Mid-history collectors are deliberately out of
        // scope here — criterion 6 already sweeps every stage with the
        // deterministic code, where the answer is not probabilistic.
        // Failures are logged with their seeds; the pinned generator
        // makes the outcome reproducible bit for bit.
        let wc = pinning_schedule();
        let horizon = wc.instance.rounds.len() as u32;
        let mut failures = Vec::new();
        for seed in 0..100u64 {
            let mut state =
                CodeState::init_source(&wc.instance, Field::binary_ext(8).unwrap(), 3).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for _ in 0..3 {
                state.rlnc_round(&mut rng).unwrap();
            }
            let cells = state.decode_matrix().unwrap();
            if !cells
                .iter()
                .filter(|c| c.stage == horizon)
                .all(|c| c.ok)
            {
                failures.push(seed);
            }
        }
        for &seed in &failures {
            println!("criterion 8: seed {seed} missed a full decode");
        }
        assert!(
            failures.len() <= 1,
            "{} of 100 trials failed (seeds {failures:?})",
            failures.len()
        );
    });
}

#[test]
fn criterion_9_flow_oracle_equivalence() {
    criterion(9, "flow-oracle equivalence", None, || {
        // 50 seeded random schedules, all graphs within the oracle's
        // 20-vertex budget; the solver must match exhaustive cut
        // enumeration exactly on every one.
        let pool = [
            common::params(4, 2, 2, 1, 0, 0, 2),
            common::params(4, 2, 3, 1, 0, 0, 2),
            common::params(5, 2, 3, 1, 0, 0, 1),
            common::params(5, 3, 4, 1, 0, 0, 1),
            common::params(4, 2, 2, 2, 0, 0, 1),
            common::params(5, 3, 3, 2, 0, 0, 1),
            common::params(5, 2, 3, 2, 0, 0, 1),
        ];
        let mut rng = ChaCha20Rng::seed_from_u64(0x0905);
        for case in 0..50 {
            let base = pool[case % pool.len()];
            let p = SystemParams {
                alpha: rng.gen_range(0..=3),
                beta: rng.gen_range(0..=3),
                ..base
            };
            let instance = common::random_schedule(&p, &mut rng);
            let t = p.horizon.finite().unwrap();
            let stage = rng.gen_range(0..=t);
            let collector = common::random_collector(&instance, stage, &mut rng);
            let g = FlowGraph::build(&instance).unwrap();
            let (g, dc) = g.with_collector(&instance, stage, &collector).unwrap();
            assert!(g.vertices().len() <= 20);
            let flow = g.max_flow(g.source(), dc).unwrap();
            let cut = common::exhaustive_min_cut(&g, g.source(), dc);
            assert_eq!(
                flow, cut,
                "case {case}: solver {flow} vs oracle {cut} on {instance:?} stage {stage} collector {collector:?}"
            );
        }
    });
}
