//! The five subcommands: input resolution, dispatch into the library,
//! human-readable summaries on stdout, and JSON reports with full
//! provenance.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use brcap_core::{
    bound_b, bound_b_restricted, capacity_t, closed_form, dominance_report, exact,
    instance_capacity, ms_mt_points, round3, tradeoff_curve, worst_case_schedule, CapacityError,
    CodeState, Field, FlowGraph, Horizon, Instance, ModelError, NetcodeError, NodeId, Scheme,
    SystemParams, TradeoffError, TradeoffPoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::config::{self, FileConfig};
use crate::{CapacityArgs, CliError, CodeKind, MincutArgs, SimulateArgs, TradeoffArgs, VerifyArgs};

fn params_json(p: &SystemParams) -> Value {
    serde_json::to_value(p).expect("params serialize")
}

/// Wraps a result in the provenance envelope every report carries: tool
/// version, command, PRNG identity, and the fully resolved config.
fn envelope(command: &str, cfg: Value, seed: Option<u64>, result: Value) -> Value {
    let prng = match seed {
        Some(seed) => json!({ "algorithm": "chacha20", "seed": seed }),
        None => Value::Null,
    };
    json!({
        "tool": { "name": "brcap", "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "prng": prng,
        "config": cfg,
        "result": result,
    })
}

fn write_report(path: Option<&Path>, report: &Value) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn map_capacity_err(e: CapacityError) -> CliError {
    match e {
        CapacityError::Model(ModelError::EnumerationCapExceeded { count, cap }) => {
            CliError::CapExceeded(format!(
                "schedule enumeration needs {count} instances but the cap is {cap}; raise {}",
                config::ENUM_CAP_VAR
            ))
        }
        other => CliError::Input(other.to_string()),
    }
}

fn map_netcode_err(e: NetcodeError) -> CliError {
    match e {
        NetcodeError::SubsetCapExceeded { count, cap } => CliError::CapExceeded(format!(
            "kernel search needs {count} subset checks but the cap is {cap}; raise {}",
            config::SUBSET_CAP_VAR
        )),
        other => CliError::Input(other.to_string()),
    }
}

/// Objective evaluations the full bound search would perform.
fn bound_search_size(p: &SystemParams) -> u128 {
    let compositions = (p.n as u128 + 1) * ((p.r as u128) + 1).pow(p.k.saturating_sub(1));
    compositions.saturating_mul(1u128 << p.k.min(127))
}

pub fn capacity(args: CapacityArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.params.config.as_deref())?;
    let p = config::resolve_params(&args.params, &file)?;
    let enum_cap = config::env_cap(config::ENUM_CAP_VAR, config::DEFAULT_ENUM_CAP)?;

    if p.r >= p.k {
        // Repairs replace whole reconstruction sets at once, so capacity
        // degenerates to a single round's bottleneck.
        let trivial = (p.k as u64 * p.alpha).min(p.d as u64 * p.beta);
        println!("trivial regime (r >= k): capacity = {trivial}");
        let report = envelope(
            "capacity",
            params_json(&p),
            None,
            json!({ "regime": "trivial", "capacity": trivial }),
        );
        return write_report(args.out.as_deref(), &report);
    }

    let evaluations = bound_search_size(&p);
    if evaluations > enum_cap as u128 {
        return Err(CliError::CapExceeded(format!(
            "bound search would evaluate {evaluations} splits but the cap is {enum_cap}; raise {}",
            config::ENUM_CAP_VAR
        )));
    }

    let sol = bound_b(&p).map_err(map_capacity_err)?;
    println!("B = {}", sol.value);
    println!(
        "optimum: x = {:?}, storage-charged rounds = {:?}",
        sol.x, sol.t1
    );

    let mut result = json!({
        "regime": "analysis",
        "bound": serde_json::to_value(&sol).expect("solution serializes"),
    });
    if p.k % p.r == 0 {
        let pruned = bound_b_restricted(&p).map_err(map_capacity_err)?.value;
        let closed = closed_form(&p).map_err(map_capacity_err)?;
        if pruned != sol.value || closed != sol.value {
            return Err(CliError::Verification(format!(
                "bound disagreement: full {}, restricted {pruned}, closed form {closed}",
                sol.value
            )));
        }
        println!("closed form agrees: {closed}");
        result["closed_form"] = json!(closed);
        result["restricted"] = json!(pruned);
    }
    let report = envelope("capacity", params_json(&p), None, result);
    write_report(args.out.as_deref(), &report)
}

pub fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.params.config.as_deref())?;
    let p = config::resolve_params(&args.params, &file)?;
    let enum_cap = config::env_cap(config::ENUM_CAP_VAR, config::DEFAULT_ENUM_CAP)?;
    let sol = bound_b(&p).map_err(map_capacity_err)?;

    if args.adversarial_only {
        let horizon = p.k;
        let pt = SystemParams {
            horizon: Horizon::Finite(horizon),
            ..p
        };
        let wc = worst_case_schedule(&pt, &sol).map_err(map_capacity_err)?;
        let flow = wc.designated_flow().map_err(map_capacity_err)?;
        let whole =
            instance_capacity(&wc.instance).map_err(|e| CliError::Input(e.to_string()))?;
        println!(
            "adversarial schedule at T = {horizon}: designated flow {flow}, schedule capacity {whole}, bound {}",
            sol.value
        );
        if flow != sol.value || whole != sol.value {
            return Err(CliError::Verification(format!(
                "adversarial schedule misses the bound: flow {flow}, capacity {whole}, bound {}",
                sol.value
            )));
        }
        let report = envelope(
            "verify",
            params_json(&pt),
            None,
            json!({
                "mode": "adversarial-only",
                "bound": sol.value,
                "designated_flow": flow,
                "schedule_capacity": whole,
            }),
        );
        return write_report(args.out.as_deref(), &report);
    }

    let tmax = args.tmax.or(file.tmax).unwrap_or(p.k + 1);
    let mut seq = Vec::new();
    for t in 0..=tmax {
        seq.push(capacity_t(&p, t, enum_cap).map_err(map_capacity_err)?);
    }
    println!("capacity over horizons 0..={tmax}: {seq:?}");
    if let Some(w) = seq.windows(2).find(|w| w[1] > w[0]) {
        return Err(CliError::Verification(format!(
            "capacity increased along the horizon: {} -> {}",
            w[0], w[1]
        )));
    }
    for (t, &c) in seq.iter().enumerate().skip(p.k as usize) {
        if c != sol.value {
            return Err(CliError::Verification(format!(
                "capacity at horizon {t} is {c}, bound says {}",
                sol.value
            )));
        }
    }
    println!(
        "nonincreasing, and equal to B = {} from T = {} on",
        sol.value, p.k
    );
    let report = envelope(
        "verify",
        params_json(&p),
        None,
        json!({ "mode": "sweep", "tmax": tmax, "sequence": seq, "bound": sol.value }),
    );
    write_report(args.out.as_deref(), &report)
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.params.config.as_deref())?;
    let seed = args.seed.or(file.seed).ok_or_else(|| {
        CliError::Input("simulate is randomized: provide --seed (flag or config)".into())
    })?;
    let code = match args.code {
        Some(code) => code,
        None => match file.code.as_deref() {
            None | Some("rlnc") => CodeKind::Rlnc,
            Some("generic") => CodeKind::Generic,
            Some(other) => {
                return Err(CliError::Input(format!(
                    "unknown code kind `{other}` in config (rlnc or generic)"
                )))
            }
        },
    };
    let field = match (&args.field, &file.field) {
        (Some(field), _) => *field,
        (None, Some(text)) => config::parse_field(text).map_err(CliError::Input)?,
        (None, None) => Field::binary_ext(8).expect("GF(2^8) is supported"),
    };

    let (instance, origin) = match &args.instance {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let instance: Instance = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("bad schedule {}: {e}", path.display())))?;
            instance
                .validate()
                .map_err(|e| CliError::Input(e.to_string()))?;
            (
                instance,
                json!({ "kind": "file", "path": path.display().to_string() }),
            )
        }
        None => {
            let p = config::resolve_params(&args.params, &file)?;
            p.horizon.finite().map_err(|_| {
                CliError::Input(
                    "simulate needs --rounds (a finite horizon) to build the adversarial schedule"
                        .into(),
                )
            })?;
            let sol = bound_b(&p).map_err(map_capacity_err)?;
            let wc = worst_case_schedule(&p, &sol).map_err(map_capacity_err)?;
            (wc.instance, json!({ "kind": "adversarial" }))
        }
    };

    let omega = match args.omega.or(file.omega) {
        Some(omega) => omega,
        None => {
            let p = instance.params;
            let default = if p.r >= p.k {
                (p.k as u64 * p.alpha).min(p.d as u64 * p.beta)
            } else {
                bound_b(&p).map_err(map_capacity_err)?.value
            };
            if default == 0 {
                return Err(CliError::Input(
                    "the schedule's capacity is 0; choose --omega explicitly".into(),
                ));
            }
            default as usize
        }
    };

    let subset_cap = config::env_cap(config::SUBSET_CAP_VAR, config::DEFAULT_SUBSET_CAP)?;
    let mut state = CodeState::init_source(&instance, field, omega).map_err(map_netcode_err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..instance.rounds.len() {
        match code {
            CodeKind::Rlnc => state.rlnc_round(&mut rng).map_err(map_netcode_err)?,
            CodeKind::Generic => state
                .generic_round(subset_cap, &mut rng)
                .map_err(map_netcode_err)?,
        }
    }

    if let Some(path) = &args.trace {
        let mut lines = String::new();
        for record in state.history() {
            lines.push_str(&serde_json::to_string(record).expect("record serializes"));
            lines.push('\n');
        }
        fs::write(path, lines)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }

    let cells = state.decode_matrix().map_err(map_netcode_err)?;
    let failures = cells.iter().filter(|c| !c.ok).count();
    println!("decode matrix: {} cells, {failures} failures", cells.len());
    for cell in cells.iter().filter(|c| !c.ok) {
        println!("  stage {} collector {:?}: FAIL", cell.stage, cell.collector);
    }

    let stages: Vec<Value> = state
        .history()
        .iter()
        .map(|r| json!({ "stage": r.stage, "mode": r.mode }))
        .collect();
    let report = envelope(
        "simulate",
        json!({
            "params": params_json(&instance.params),
            "instance": origin,
            "code": match code { CodeKind::Rlnc => "rlnc", CodeKind::Generic => "generic" },
            "omega": omega,
            "field": serde_json::to_value(field.spec()).expect("field spec serializes"),
        }),
        Some(seed),
        json!({
            "stages": stages,
            "decode_matrix": serde_json::to_value(&cells).expect("cells serialize"),
            "failures": failures,
        }),
    );
    write_report(args.out.as_deref(), &report)?;

    if matches!(code, CodeKind::Generic) && failures > 0 {
        // The deterministic construction is supposed to reach capacity;
        // a failed collector means the premise (dimension within the
        // bound) or the construction itself is broken.
        return Err(CliError::Verification(format!(
            "generic code left {failures} collector(s) unable to decode"
        )));
    }
    Ok(())
}

pub fn tradeoff(args: TradeoffArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let k = args.k.or(file.k).ok_or_else(|| config::missing("k"))?;
    let d = args.d.or(file.d).ok_or_else(|| config::missing("d"))?;
    let r = args.r.or(file.r).ok_or_else(|| config::missing("r"))?;
    let samples = args.samples.or(file.samples).unwrap_or(33) as usize;
    let map_err = |e: TradeoffError| CliError::Input(e.to_string());

    let (msb, mtb) = ms_mt_points(k, d, r, Scheme::Broadcast).map_err(map_err)?;
    let curve = tradeoff_curve(k, d, r, samples).map_err(map_err)?;
    let (ms1, mt1) = ms_mt_points(k, d, 1, Scheme::Broadcast).map_err(map_err)?;
    let baseline = tradeoff_curve(k, d, 1, samples).map_err(map_err)?;
    let (msc, mtc) = ms_mt_points(k, d, r, Scheme::Cooperative).map_err(map_err)?;
    let gaps = dominance_report(k, d, r).map_err(map_err)?;

    let mut csv = String::from("scheme,tau,alpha,label\n");
    let mut push = |scheme: &str, pt: &TradeoffPoint| {
        csv.push_str(&format!(
            "{scheme},{},{},{}\n",
            round3(pt.tau),
            round3(pt.alpha),
            pt.label
        ));
    };
    for pt in &curve {
        push("broadcast", pt);
    }
    push("broadcast", &msb);
    push("broadcast", &mtb);
    for pt in &baseline {
        push("baseline", pt);
    }
    push("baseline", &ms1);
    push("baseline", &mt1);
    push("cooperative", &msc);
    push("cooperative", &mtc);

    match &args.out {
        Some(path) => {
            fs::write(path, &csv)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
            println!(
                "wrote {} rows to {}",
                curve.len() + baseline.len() + 6,
                path.display()
            );
        }
        None => print!("{csv}"),
    }

    if let Some(path) = &args.exact_out {
        let point = |pt: &TradeoffPoint| {
            json!({
                "tau": exact(pt.tau),
                "alpha": exact(pt.alpha),
                "label": pt.label.to_string(),
            })
        };
        let sidecar = envelope(
            "tradeoff",
            json!({ "k": k, "d": d, "r": r, "samples": samples }),
            None,
            json!({
                "broadcast": { "ms": point(&msb), "mt": point(&mtb) },
                "baseline": { "ms": point(&ms1), "mt": point(&mt1) },
                "cooperative": { "ms": point(&msc), "mt": point(&mtc) },
                "dominance": {
                    "ms_gap": exact(gaps.ms_gap),
                    "mt_gap": exact(gaps.mt_gap),
                    "strict": gaps.strict,
                },
            }),
        );
        write_report(Some(path), &sidecar)?;
    }
    Ok(())
}

pub fn mincut(args: MincutArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.instance)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.instance.display())))?;
    let instance: Instance = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("bad schedule {}: {e}", args.instance.display())))?;
    instance
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let collector = parse_collector(&args.collector)?;

    let g = FlowGraph::build(&instance).map_err(|e| CliError::Input(e.to_string()))?;
    let (g, dc) = g
        .with_collector(&instance, args.stage, &collector)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let flow = g
        .max_flow(g.source(), dc)
        .map_err(|e| CliError::Input(e.to_string()))?;
    println!(
        "max flow to {:?} at stage {}: {flow}",
        collector, args.stage
    );

    if let Some(path) = &args.export {
        let edge_list = g.export_edge_list();
        let edges: Vec<&str> = edge_list.lines().collect();
        let export = json!({ "vertices": g.vertex_table(), "edges": edges });
        let text = serde_json::to_string_pretty(&export).expect("export serializes");
        fs::write(path, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }

    let report = envelope(
        "mincut",
        json!({
            "instance": args.instance.display().to_string(),
            "stage": args.stage,
            "collector": collector,
        }),
        None,
        json!({ "max_flow": flow }),
    );
    write_report(args.out.as_deref(), &report)
}

fn parse_collector(text: &str) -> Result<BTreeSet<NodeId>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<NodeId>()
                .map_err(|_| CliError::Input(format!("bad collector node `{part}`")))
        })
        .collect()
}
