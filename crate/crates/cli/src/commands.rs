//! The subcommands, callable without going through argument parsing.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use ropeclimb_core::energy::{jump_energy, EnergyReport};
use ropeclimb_core::planner::{bench_integrator, obstacle_min_x, plan_jump, BenchRow, JumpPlan};
use ropeclimb_core::sim::{
    batch_robustness, landing_episode, longest_outward_run, run_episode, Controller, DisturbanceSpec, Event, SimTrace,
    IMPULSE_DURATION,
};
use ropeclimb_core::scenario::contact_frame;
use ropeclimb_core::{Method, Vec3};
use ropeclimb_wrench::{margin_heatmap, Heatmap, WrenchError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioFile};
use crate::persist::{num, sha256_hex, PersistError, Run};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Core(#[from] ropeclimb_core::Error),
    #[error(transparent)]
    Wrench(#[from] WrenchError),
    /// The command ran and wrote its outputs, but a run failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ropeclimb_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Persist(_) => 2,
            CliError::Core(E::Invalid { .. }) => 2,
            CliError::Wrench(WrenchError::Invalid { .. } | WrenchError::Dimension { .. }) => 2,
            CliError::Wrench(WrenchError::Core(E::Invalid { .. })) => 2,
            CliError::Core(_) | CliError::Wrench(_) | CliError::Failed(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// What a command prints and where its manifest went.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: PathBuf,
    pub lines: Vec<String>,
}

/// A plan together with the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub config: ScenarioFile,
    pub plan: JumpPlan,
}

pub fn load_plan(path: &Path) -> Result<(PlanFile, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read plan {}: {e}", path.display())))?;
    let file: PlanFile =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("cannot parse plan {}: {e}", path.display())))?;
    Ok((file, sha256_hex(&bytes)))
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn v3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

// ---- plan ----

#[derive(Clone, Debug, Serialize)]
pub struct PlanSummary {
    pub status: String,
    pub iterations: usize,
    pub terminal_error: f64,
    pub t_f: f64,
    pub f_leg: [f64; 3],
    pub energy: EnergyReport,
    pub open_loop_landing_error: f64,
    /// Smallest `p_x - (x_hat + c)` over the knots when an obstacle is set.
    pub obstacle_margin: Option<f64>,
    pub audit_violation: f64,
}

fn knot_rows(plan: &JumpPlan) -> Vec<Vec<String>> {
    let dt = plan.dt();
    (0..plan.positions.len())
        .map(|k| {
            let s = &plan.states[k];
            let p = &plan.positions[k];
            let (fl, fr) = if k < plan.n_knots() { (plan.f_r_left[k], plan.f_r_right[k]) } else { (f64::NAN, f64::NAN) };
            [k as f64, plan.t_th + k as f64 * dt, p.x, p.y, p.z, s.psi, s.l1, s.l2, s.psi_dot, s.l1_dot, s.l2_dot, fl, fr]
                .iter()
                .enumerate()
                .map(|(i, v)| if i == 0 { k.to_string() } else if v.is_nan() { String::new() } else { num(*v) })
                .collect()
        })
        .collect()
}

pub const KNOT_COLUMNS: [&str; 13] =
    ["k", "t", "x", "y", "z", "psi", "l1", "l2", "psi_dot", "l1_dot", "l2_dot", "f_r_left", "f_r_right"];

pub fn cmd_plan(cfg: &ScenarioFile, out: &Path) -> Result<Outcome> {
    let s = &cfg.scenario;
    let inputs = serde_json::json!({ "config": to_json(cfg) });
    let plan = plan_jump(&cfg.jump.p0, &cfg.jump.p_tg, s, &cfg.planner, &cfg.integrator)?;
    let trace = run_episode(&plan, &Controller::OpenLoop, &DisturbanceSpec::None, &Default::default(), s, &cfg.sim)?;
    let energy = jump_energy(&trace, s)?;
    let obstacle_margin = s.obstacle.as_ref().map(|o| {
        plan.positions
            .iter()
            .map(|p| p.x - obstacle_min_x(p.y, p.z, o, cfg.planner.clearance, s.wall_offset))
            .fold(f64::INFINITY, f64::min)
    });
    let summary = PlanSummary {
        status: format!("{:?}", plan.report.status),
        iterations: plan.report.iterations,
        terminal_error: plan.terminal_error(),
        t_f: plan.t_f,
        f_leg: v3(&plan.f_leg),
        energy,
        open_loop_landing_error: trace.landing_error.norm(),
        obstacle_margin,
        audit_violation: plan.report.audit_violation,
    };

    let mut run = Run::new("plan", inputs, cfg.seed, out)?;
    let plan_path = run.write_json("plan", &PlanFile { config: cfg.clone(), plan: plan.clone() })?;
    run.write_csv("knots", &KNOT_COLUMNS, &knot_rows(&plan))?;
    run.write_json("summary", &summary)?;
    let manifest = run.finish()?;

    let mut lines = vec![
        format!("plan: {}", plan_path.display()),
        format!("terminal error: {:.4} m", summary.terminal_error),
        format!("flight time t_f: {:.4} s", summary.t_f),
        format!(
            "energy estimate: {:.2} J (kinetic {:.2} J, hoist {:.2} J)",
            energy.total, energy.kinetic, energy.hoist
        ),
    ];
    if let Some(m) = obstacle_margin {
        lines.push(format!("obstacle clearance margin: {m:.3e} m ({})", if m >= -1e-6 { "clear" } else { "VIOLATED" }));
    }
    if obstacle_margin.is_some_and(|m| m < -1e-6) {
        return Err(CliError::Failed(format!("obstacle constraint violated; outputs in {}", manifest.display())));
    }
    Ok(Outcome { manifest, lines })
}

// ---- track ----

/// Parse `none`, `constant:fx,fy,fz` or `impulse:fx,fy,fz@start[+duration]`.
pub fn parse_disturbance(spec: &str) -> Result<DisturbanceSpec> {
    let bad = || CliError::Usage(format!("bad disturbance '{spec}': use none, constant:fx,fy,fz or impulse:fx,fy,fz@start[+duration]"));
    let vec3 = |s: &str| -> Result<Vec3> {
        let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        if v.len() != 3 {
            return Err(bad());
        }
        Ok(Vec3::new(v[0], v[1], v[2]))
    };
    if spec == "none" {
        return Ok(DisturbanceSpec::None);
    }
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "constant" => Ok(DisturbanceSpec::Constant { force: vec3(rest)? }),
        "impulse" | "impulsive" => {
            let (force, window) = rest.split_once('@').unwrap_or((rest, "0"));
            let (start, duration) = match window.split_once('+') {
                Some((a, b)) => (a, b.parse::<f64>().map_err(|_| bad())?),
                None => (window, IMPULSE_DURATION),
            };
            Ok(DisturbanceSpec::Impulsive { force: vec3(force)?, start: start.parse().map_err(|_| bad())?, duration })
        }
        _ => Err(bad()),
    }
}

pub fn parse_controller(name: &str, cfg: &ScenarioFile) -> Result<Controller> {
    match name {
        "mpc" => Ok(Controller::Mpc(cfg.mpc.clone())),
        "open-loop" | "open_loop" => Ok(Controller::OpenLoop),
        other => Err(CliError::Usage(format!("unknown controller '{other}' (mpc, open-loop)"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackSummary {
    pub landing_error: [f64; 3],
    pub landing_error_norm: f64,
    pub events: Vec<Event>,
    pub mpc_solves: usize,
    pub degraded_solves: usize,
    /// Largest excursion of a rope or propeller input past its bound.
    pub bound_violation: f64,
    pub leg_violation: f64,
    pub energy: Option<EnergyReport>,
    /// Longest run of steps moving away from the wall after touch-down.
    pub outward_steps: Option<usize>,
    pub failure: Option<String>,
    pub trace_sha256: String,
}

pub const TRACE_COLUMNS: [&str; 22] = [
    "t", "phase", "psi", "l1", "l2", "psi_dot", "l1_dot", "l2_dot", "x", "y", "z", "vx", "vy", "vz", "f_r_left",
    "f_r_right", "f_p", "d_x", "d_y", "d_z", "contact_force", "f_leg_norm",
];

pub fn trace_rows(trace: &SimTrace) -> Vec<Vec<String>> {
    trace
        .rows
        .iter()
        .map(|r| {
            let s = &r.state;
            let mut row = vec![num(r.t), format!("{:?}", r.phase).to_lowercase()];
            row.extend(
                [
                    s.psi,
                    s.l1,
                    s.l2,
                    s.psi_dot,
                    s.l1_dot,
                    s.l2_dot,
                    r.position.x,
                    r.position.y,
                    r.position.z,
                    r.velocity.x,
                    r.velocity.y,
                    r.velocity.z,
                    r.input.f_r_left,
                    r.input.f_r_right,
                    r.input.f_p,
                    r.disturbance.x,
                    r.disturbance.y,
                    r.disturbance.z,
                    r.contact_force,
                    r.input.f_leg.norm(),
                ]
                .iter()
                .map(|v| num(*v)),
            );
            row
        })
        .collect()
}

/// Largest excursion of the rope and propeller inputs past their bounds.
pub fn bound_violation(trace: &SimTrace, cfg: &ScenarioFile) -> f64 {
    let s = &cfg.scenario;
    trace
        .rows
        .iter()
        .map(|r| {
            let u = &r.input;
            [u.f_r_left, u.f_r_right, -u.f_r_left - s.f_r_max, -u.f_r_right - s.f_r_max, u.f_p.abs() - s.f_p_max]
                .into_iter()
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the leg force limit and friction pyramid.
pub fn leg_violation(trace: &SimTrace, cfg: &ScenarioFile) -> f64 {
    let s = &cfg.scenario;
    let frame = contact_frame(&s.contact_normal);
    trace
        .rows
        .iter()
        .map(|r| {
            let f = &r.input.f_leg;
            let f_n = s.contact_normal.dot(f);
            let f_t = frame.column(0).dot(f).abs().max(frame.column(1).dot(f).abs());
            [-f_n, f_n - s.f_leg_max, f_t - s.mu * f_n].into_iter().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub struct TrackArgs<'a> {
    pub plan: &'a Path,
    pub overrides: &'a [String],
    pub controller: &'a str,
    pub disturbance: Option<&'a str>,
    pub noise: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub landing: bool,
}

pub fn cmd_track(args: &TrackArgs, out: &Path) -> Result<Outcome> {
    let (file, plan_sha) = load_plan(args.plan)?;
    let mut cfg = file.config.with_overrides(args.overrides)?;
    if let Some(d) = args.disturbance {
        cfg.disturbance = parse_disturbance(d)?;
    }
    if let Some(sigma) = args.noise {
        cfg.noise.sigma = sigma;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.noise.seed = seed;
    }
    cfg.validate()?;
    let plan = &file.plan;
    cfg.disturbance.check(plan.t_f)?;
    let controller = parse_controller(args.controller, &cfg)?;
    let s = &cfg.scenario;
    let trace = if args.landing {
        if cfg.disturbance != DisturbanceSpec::None || !cfg.noise.is_zero() {
            return Err(CliError::Usage("landing runs take no disturbance or noise".into()));
        }
        landing_episode(plan, &controller, &cfg.landing, s, &cfg.sim)?
    } else {
        run_episode(plan, &controller, &cfg.disturbance, &cfg.noise, s, &cfg.sim)?
    };
    let inputs = serde_json::json!({
        "config": to_json(&cfg),
        "plan_sha256": plan_sha,
        "controller": args.controller,
        "landing": args.landing,
    });
    let rows = trace_rows(&trace);
    let mut run = Run::new("track", inputs, cfg.seed, out)?;
    let trace_path = run.write_csv("trace", &TRACE_COLUMNS, &rows)?;
    let trace_sha = sha256_hex(&std::fs::read(&trace_path).map_err(|source| PersistError::Io { path: trace_path.clone(), source })?);
    let summary = TrackSummary {
        landing_error: v3(&trace.landing_error),
        landing_error_norm: trace.landing_error.norm(),
        events: trace.events.clone(),
        mpc_solves: trace.mpc_solves,
        degraded_solves: trace.degraded_solves,
        bound_violation: bound_violation(&trace, &cfg),
        leg_violation: leg_violation(&trace, &cfg),
        energy: jump_energy(&trace, s).ok(),
        outward_steps: args.landing.then(|| longest_outward_run(&trace, s, 0.0)),
        failure: trace.failure.clone(),
        trace_sha256: trace_sha.clone(),
    };
    run.write_json("summary", &summary)?;
    let manifest = run.finish()?;
    let mut lines = vec![
        format!("trace: {}", trace_path.display()),
        format!("landing error: {:.4} m", summary.landing_error_norm),
        format!("mpc solves: {} ({} degraded)", summary.mpc_solves, summary.degraded_solves),
        format!("trace sha256: {trace_sha}"),
    ];
    if let Some(n) = summary.outward_steps {
        lines.push(format!("longest outward run after contact: {n} steps"));
    }
    if let Some(f) = &trace.failure {
        return Err(CliError::Failed(format!("run failed: {f}; outputs in {}", manifest.display())));
    }
    Ok(Outcome { manifest, lines })
}

// ---- heatmap ----

/// `fx`, `-fz`, `+my`, ... or six comma-separated components (normalized).
pub fn parse_direction(spec: &str) -> Result<DVector<f64>> {
    let bad = || CliError::Usage(format!("bad direction '{spec}': use [+-](fx|fy|fz|mx|my|mz) or six numbers"));
    let names = ["fx", "fy", "fz", "mx", "my", "mz"];
    let (negative, name) = match spec.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, spec.strip_prefix('+').unwrap_or(spec)),
    };
    if let Some(axis) = names.iter().position(|n| *n == name) {
        return Ok(ropeclimb_wrench::axis_direction(axis, negative));
    }
    let v: Vec<f64> = spec.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    if v.len() != 6 {
        return Err(bad());
    }
    let d = DVector::from_vec(v);
    let n = d.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(bad());
    }
    Ok(d / n)
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatmapSummary {
    pub direction: Vec<f64>,
    pub mu: f64,
    pub cells: usize,
    pub feasible: usize,
    pub failed: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

pub const HEATMAP_COLUMNS: [&str; 7] = ["mu", "x", "y", "z", "gamma", "feasible", "error"];

pub fn cmd_heatmap(cfg: &ScenarioFile, direction: &str, mu_sweep: &[f64], out: &Path) -> Result<Outcome> {
    let dir = parse_direction(direction)?;
    let mus: Vec<f64> = if mu_sweep.is_empty() { vec![cfg.scenario.mu] } else { mu_sweep.to_vec() };
    let mut maps: Vec<(f64, Heatmap)> = Vec::new();
    for &mu in &mus {
        let mut s = cfg.scenario.clone();
        s.mu = mu;
        s.validate()?;
        maps.push((mu, margin_heatmap(&cfg.grid, &dir, &s)?));
    }
    let inputs = serde_json::json!({ "config": to_json(cfg), "direction": dir.as_slice(), "mu": mus });
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (mu, h) in &maps {
        for c in &h.cells {
            rows.push(vec![
                num(*mu),
                num(h.grid.x),
                num(c.y),
                num(c.z),
                num(c.gamma),
                c.feasible.to_string(),
                c.error.clone().unwrap_or_default(),
            ]);
        }
        let ok = h.cells.iter().filter(|c| c.error.is_none());
        summaries.push(HeatmapSummary {
            direction: h.direction.clone(),
            mu: *mu,
            cells: h.cells.len(),
            feasible: h.cells.iter().filter(|c| c.feasible).count(),
            failed: h.cells.iter().filter(|c| c.error.is_some()).count(),
            gamma_min: ok.clone().map(|c| c.gamma).fold(f64::INFINITY, f64::min),
            gamma_max: ok.map(|c| c.gamma).fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let mut run = Run::new("heatmap", inputs, cfg.seed, out)?;
    let csv = run.write_csv("heatmap", &HEATMAP_COLUMNS, &rows)?;
    run.write_json("summary", &summaries)?;
    let manifest = run.finish()?;
    let mut lines = vec![format!("heatmap: {}", csv.display())];
    for s in &summaries {
        lines.push(format!(
            "mu {}: {}/{} feasible, margin {:.3}..{:.3} N, {} failed cells",
            s.mu, s.feasible, s.cells, s.gamma_min, s.gamma_max, s.failed
        ));
    }
    if summaries.iter().any(|s| s.failed > 0) {
        return Err(CliError::Failed(format!("some cells failed; outputs in {}", manifest.display())));
    }
    Ok(Outcome { manifest, lines })
}

// ---- bench-integrators ----

/// Rows of the integration-scheme comparison: (knots, method, substeps).
pub const BENCH_ROWS: [(usize, Method, usize); 6] = [
    (40, Method::Rk4, 0),
    (60, Method::Rk4, 0),
    (40, Method::Rk4, 5),
    (40, Method::Euler, 0),
    (40, Method::Euler, 10),
    (30, Method::Rk4, 5),
];

/// Parse `40:rk4:0,30:rk4:5,...`.
pub fn parse_bench_rows(spec: &str) -> Result<Vec<(usize, Method, usize)>> {
    spec.split(',')
        .map(|item| {
            let bad = || CliError::Usage(format!("bad bench row '{item}': use knots:method:substeps"));
            let parts: Vec<&str> = item.trim().split(':').collect();
            let [n, m, s] = parts.as_slice() else { return Err(bad()) };
            let method = match m.to_ascii_lowercase().as_str() {
                "rk4" => Method::Rk4,
                "euler" | "eul" => Method::Euler,
                _ => return Err(bad()),
            };
            Ok((n.parse().map_err(|_| bad())?, method, s.parse().map_err(|_| bad())?))
        })
        .collect()
}

pub const BENCH_COLUMNS: [&str; 6] = ["n_knots", "method", "n_sub", "iterations", "integration_error", "landing_error"];

pub fn cmd_bench_integrators(cfg: &ScenarioFile, rows: &[(usize, Method, usize)], out: &Path) -> Result<Outcome> {
    let mut results: Vec<BenchRow> = Vec::new();
    for &(n, method, n_sub) in rows {
        let mut w = cfg.planner.clone();
        w.n_knots = n;
        results.push(bench_integrator(&cfg.jump.p0, &cfg.jump.p_tg, &cfg.scenario, &w, method, n_sub, cfg.integrator.max_iters)?);
    }
    let inputs = serde_json::json!({ "config": to_json(cfg), "rows": rows.iter().map(|(n, m, s)| (n, m, s)).collect::<Vec<_>>() });
    let csv_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.n_knots.to_string(),
                format!("{:?}", r.method).to_lowercase(),
                r.n_sub.to_string(),
                r.iterations.to_string(),
                num(r.integration_error),
                num(r.landing_error),
            ]
        })
        .collect();
    let mut run = Run::new("bench", inputs, cfg.seed, out)?;
    let csv = run.write_csv("integrators", &BENCH_COLUMNS, &csv_rows)?;
    let manifest = run.finish()?;
    let mut lines = vec![format!("table: {}", csv.display()), "   N  method  N_sub   |e_i| (m)   |e_a| (m)   solve (s)".into()];
    for r in &results {
        lines.push(format!(
            "{:>4}  {:>6}  {:>5}   {:>9.5}   {:>9.5}   {:>9.2}",
            r.n_knots,
            format!("{:?}", r.method).to_uppercase(),
            r.n_sub,
            r.integration_error,
            r.landing_error,
            r.solve_seconds
        ));
    }
    Ok(Outcome { manifest, lines })
}

// ---- robustness ----

pub const ROBUSTNESS_COLUMNS: [&str; 5] = ["interval", "runs", "failures", "mean_error", "std_error"];

pub fn cmd_robustness(plan_path: &Path, overrides: &[String], n: usize, seed: Option<u64>, controller: &str, out: &Path) -> Result<Outcome> {
    let (file, plan_sha) = load_plan(plan_path)?;
    let mut cfg = file.config.with_overrides(overrides)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let ctrl = parse_controller(controller, &cfg)?;
    let s = &cfg.scenario;
    let summary = batch_robustness(&file.plan, &ctrl, n, &cfg.sampler, &cfg.noise, s, &cfg.sim, cfg.seed)?;
    let inputs = serde_json::json!({
        "config": to_json(&cfg),
        "plan_sha256": plan_sha,
        "controller": controller,
        "runs_per_interval": n,
    });
    let rows: Vec<Vec<String>> = summary
        .intervals
        .iter()
        .map(|i| vec![i.interval.to_string(), i.runs.to_string(), i.failures.to_string(), num(i.mean_error), num(i.std_error)])
        .collect();
    let mut run = Run::new("robustness", inputs, cfg.seed, out)?;
    let csv = run.write_csv("stats", &ROBUSTNESS_COLUMNS, &rows)?;
    run.write_json("summary", &summary)?;
    let manifest = run.finish()?;
    let mut lines = vec![format!("stats: {}", csv.display())];
    for i in &summary.intervals {
        lines.push(format!(
            "interval {:>2}: mean {:.4} m, std {:.4} m, {} of {} failed",
            i.interval, i.mean_error, i.std_error, i.failures, i.runs
        ));
    }
    Ok(Outcome { manifest, lines })
}
