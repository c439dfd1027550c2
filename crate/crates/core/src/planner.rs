//! Offline jump optimizer.
//!
//! Single shooting: a thrust phase of length `t_th` with the leg force held
//! constant (ropes at their first-knot values), then `N` flight knots of
//! length `t_f / N` with zero-order-held rope forces. Decision vector, in
//! scaled units:
//!
//! ```text
//! z = (f_leg / f_leg_max [3], F_l / f_r_max [N], F_r / f_r_max [N], t_f [s])
//! ```
//!
//! The cost is a sum of squares (terminal error, force increments and a
//! smoothed hoist work term) so the solver can use a Gauss-Newton model.

use nalgebra::{DVector, Matrix3x2};
use serde::{Deserialize, Serialize};

use crate::integrator::{rollout, step, IntegratorConfig, Method, Rollout};
use crate::model::{inverse_kinematics, rope_axes, ControlInput, ReducedState};
use crate::optim::fd::FdScheme;
use crate::optim::{solve_nlp, Evaluation, NlpOptions, NlpProblem, NlpStatus};
use crate::scenario::{contact_frame, Ellipsoid, Scenario, Vec3};
use crate::{Error, Result};

/// Smoothing width of `|x|` inside the hoist-work cost.
pub const HOIST_DELTA: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerWeights {
    pub n_knots: usize,
    pub w_hw: f64,
    pub w_s: f64,
    /// Weight of the quadratic terminal error.
    pub w_terminal: f64,
    /// Radius of the hard terminal ball (m).
    pub slack: f64,
    /// Obstacle clearance (m).
    pub clearance: f64,
    /// Margin kept from the flat wall plane at every knot (m).
    pub wall_eps: f64,
    pub t_f_min: f64,
    pub t_f_max: f64,
}

impl Default for PlannerWeights {
    fn default() -> Self {
        PlannerWeights {
            n_knots: 30,
            w_hw: 0.1,
            w_s: 1.0,
            w_terminal: 1000.0,
            slack: 0.02,
            clearance: 1.0,
            wall_eps: 0.02,
            t_f_min: 0.2,
            t_f_max: 10.0,
        }
    }
}

impl PlannerWeights {
    pub fn check(&self) -> Result<()> {
        if self.n_knots < 10 {
            return Err(Error::invalid("planner", "n_knots must be >= 10"));
        }
        let w = [self.w_hw, self.w_s, self.w_terminal, self.slack, self.clearance, self.wall_eps];
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("planner", "weights and margins must be >= 0"));
        }
        if !(self.slack > 0.0) {
            return Err(Error::invalid("planner", "slack must be > 0 m"));
        }
        if !(self.t_f_min > 0.0 && self.t_f_min < self.t_f_max) {
            return Err(Error::invalid("planner", "need 0 < t_f_min < t_f_max"));
        }
        Ok(())
    }
}

/// Integration settings of the planner; the knot interval follows `t_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub method: Method,
    pub n_sub: usize,
    pub max_iters: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { method: Method::Rk4, n_sub: 5, max_iters: 150 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: NlpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    /// Largest violation found by the independent post-solve audit.
    pub audit_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPlan {
    pub p0: Vec3,
    pub p_tg: Vec3,
    pub f_leg: Vec3,
    pub f_r_left: Vec<f64>,
    pub f_r_right: Vec<f64>,
    pub t_f: f64,
    pub t_th: f64,
    pub method: Method,
    pub n_sub: usize,
    /// Flight states at the `N + 1` knots; the first is the lift-off state.
    pub states: Vec<ReducedState>,
    pub positions: Vec<Vec3>,
    pub report: SolveReport,
}

impl JumpPlan {
    pub fn n_knots(&self) -> usize {
        self.f_r_left.len()
    }

    pub fn dt(&self) -> f64 {
        self.t_f / self.n_knots() as f64
    }

    pub fn thrust_input(&self) -> ControlInput {
        ControlInput { f_r_left: self.f_r_left[0], f_r_right: self.f_r_right[0], f_leg: self.f_leg, f_p: 0.0 }
    }

    pub fn flight_input(&self, k: usize) -> ControlInput {
        ControlInput::ropes(self.f_r_left[k], self.f_r_right[k])
    }

    pub fn schedule(&self) -> Vec<ControlInput> {
        (0..self.n_knots()).map(|k| self.flight_input(k)).collect()
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { method: self.method, n_sub: self.n_sub, dt: self.dt() }
    }

    pub fn terminal_error(&self) -> f64 {
        (self.positions[self.positions.len() - 1] - self.p_tg).norm()
    }

    pub fn initial_state(&self, scenario: &Scenario) -> Result<ReducedState> {
        rest_state(&self.p0, scenario)
    }
}

fn rest_state(p: &Vec3, scenario: &Scenario) -> Result<ReducedState> {
    let (psi, l1, l2) = inverse_kinematics(p, scenario)?;
    Ok(ReducedState::at_rest(psi, l1, l2))
}

/// Thrust phase followed by the flight knots, all with the given integrator.
#[allow(clippy::too_many_arguments)]
pub fn simulate_plan_inputs(
    q0: &ReducedState,
    f_leg: &Vec3,
    f_l: &[f64],
    f_r: &[f64],
    t_f: f64,
    method: Method,
    n_sub: usize,
    scenario: &Scenario,
) -> Result<Rollout> {
    let thrust = ControlInput { f_r_left: f_l[0], f_r_right: f_r[0], f_leg: *f_leg, f_p: 0.0 };
    let thrust_cfg = IntegratorConfig::new(method, n_sub, scenario.t_th)?;
    let lift_off = step(q0, &thrust, &thrust_cfg, scenario)?;
    let schedule: Vec<_> = f_l.iter().zip(f_r).map(|(l, r)| ControlInput::ropes(*l, *r)).collect();
    let cfg = IntegratorConfig::new(method, n_sub, t_f / f_l.len() as f64)?;
    rollout(&lift_off, &schedule, &cfg, scenario)
}

/// Re-integrate a plan's inputs with every step no longer than `max_step`.
pub fn reintegrate(plan: &JumpPlan, scenario: &Scenario, max_step: f64) -> Result<Rollout> {
    let q0 = plan.initial_state(scenario)?;
    let thrust_sub = (scenario.t_th / max_step).ceil().max(1.0) as usize;
    let thrust_cfg = IntegratorConfig::new(Method::Rk4, thrust_sub, scenario.t_th)?;
    let lift_off = step(&q0, &plan.thrust_input(), &thrust_cfg, scenario)?;
    let n_sub = (plan.dt() / max_step).ceil().max(1.0) as usize;
    rollout(&lift_off, &plan.schedule(), &IntegratorConfig::new(Method::Rk4, n_sub, plan.dt())?, scenario)
}

/// Lower bound on `p_x` imposed by the obstacle at lateral position `(p_y, p_z)`.
pub fn obstacle_min_x(p_y: f64, p_z: f64, obstacle: &Ellipsoid, clearance: f64, wall_offset: f64) -> f64 {
    match obstacle_q(p_y, p_z, obstacle) {
        q if q > 0.0 => obstacle.center.x + q.sqrt() + clearance,
        _ => wall_offset,
    }
}

fn obstacle_q(p_y: f64, p_z: f64, o: &Ellipsoid) -> f64 {
    let r = &o.semi_axes;
    let rx2 = r.x * r.x;
    rx2 - rx2 / (r.y * r.y) * (p_y - o.center.y).powi(2) - rx2 / (r.z * r.z) * (p_z - o.center.z).powi(2)
}

/// Continuous obstacle constraint, `<= 0` when `p` clears the obstacle.
fn obstacle_constraint(p: &Vec3, o: &Ellipsoid, clearance: f64) -> f64 {
    let q = obstacle_q(p.y, p.z, o);
    let gap = p.x - (o.center.x + clearance + q.max(0.0).sqrt());
    -(-q).max(gap)
}

/// Resample knot positions every `dt` by linear interpolation.
pub fn map_plan_to_reference(plan: &JumpPlan, dt: f64) -> Vec<Vec3> {
    let knot_dt = plan.dt();
    let n = plan.n_knots();
    let samples = (plan.t_f / dt + 1e-9).floor() as usize;
    (0..=samples)
        .map(|j| {
            let s = (j as f64 * dt / knot_dt).min(n as f64);
            let k = (s.floor() as usize).min(n - 1);
            let frac = s - k as f64;
            plan.positions[k] * (1.0 - frac) + plan.positions[k + 1] * frac
        })
        .collect()
}

/// Rope forces (clipped to bounds) that best hold the mass still at `p`.
pub fn static_rope_forces(p: &Vec3, scenario: &Scenario) -> (f64, f64) {
    let (al, ar) = rope_axes(p, scenario);
    let a = Matrix3x2::from_columns(&[al, ar]);
    let rhs = -scenario.weight();
    let f = (a.transpose() * a).try_inverse().map(|inv| inv * a.transpose() * rhs).unwrap_or_default();
    (f[0].clamp(-scenario.f_r_max, 0.0), f[1].clamp(-scenario.f_r_max, 0.0))
}

struct JumpProblem<'a> {
    scenario: &'a Scenario,
    weights: &'a PlannerWeights,
    cfg: &'a PlannerConfig,
    q0: ReducedState,
    p_tg: Vec3,
    /// Tangent frame of the contact surface.
    t1: Vec3,
    t2: Vec3,
}

struct Decoded {
    f_leg: Vec3,
    f_l: Vec<f64>,
    f_r: Vec<f64>,
    t_f: f64,
}

impl JumpProblem<'_> {
    fn n(&self) -> usize {
        self.weights.n_knots
    }

    fn decode(&self, z: &DVector<f64>) -> Decoded {
        let n = self.n();
        let s = self.scenario;
        Decoded {
            f_leg: Vec3::new(z[0], z[1], z[2]) * s.f_leg_max,
            f_l: (0..n).map(|k| z[3 + k] * s.f_r_max).collect(),
            f_r: (0..n).map(|k| z[3 + n + k] * s.f_r_max).collect(),
            t_f: z[3 + 2 * n],
        }
    }

    fn encode(&self, f_leg: &Vec3, f_l: &[f64], f_r: &[f64], t_f: f64) -> DVector<f64> {
        let n = self.n();
        let s = self.scenario;
        let mut z = DVector::zeros(3 + 2 * n + 1);
        for i in 0..3 {
            z[i] = f_leg[i] / s.f_leg_max;
        }
        for k in 0..n {
            z[3 + k] = f_l[k] / s.f_r_max;
            z[3 + n + k] = f_r[k] / s.f_r_max;
        }
        z[3 + 2 * n] = t_f;
        z
    }

    fn leg_constraints(&self, f: &Vec3) -> [f64; 6] {
        let s = self.scenario;
        let fn_ = s.contact_normal.dot(f) / s.f_leg_max;
        let (a, b) = (self.t1.dot(f) / s.f_leg_max, self.t2.dot(f) / s.f_leg_max);
        [-fn_, fn_ - 1.0, a - s.mu * fn_, -a - s.mu * fn_, b - s.mu * fn_, -b - s.mu * fn_]
    }

    fn path_constraint(&self, p: &Vec3) -> f64 {
        let s = self.scenario;
        let wall = s.wall_offset + self.weights.wall_eps - s.wall_normal.dot(p);
        match &s.obstacle {
            Some(o) => wall.max(obstacle_constraint(p, o, self.weights.clearance)),
            None => wall,
        }
    }
}

impl NlpProblem for JumpProblem<'_> {
    fn dim(&self) -> usize {
        3 + 2 * self.n() + 1
    }

    fn lower(&self) -> DVector<f64> {
        let n = self.n();
        let mut l = DVector::from_element(self.dim(), -1.0);
        l[3 + 2 * n] = self.weights.t_f_min;
        l
    }

    fn upper(&self) -> DVector<f64> {
        let n = self.n();
        let mut u = DVector::zeros(self.dim());
        for i in 0..3 {
            u[i] = 1.0;
        }
        u[3 + 2 * n] = self.weights.t_f_max;
        u
    }

    fn evaluate(&self, z: &DVector<f64>) -> Result<Evaluation> {
        let d = self.decode(z);
        let w = self.weights;
        let n = self.n();
        let traj = simulate_plan_inputs(&self.q0, &d.f_leg, &d.f_l, &d.f_r, d.t_f, self.cfg.method, self.cfg.n_sub, self.scenario)?;
        let dt = d.t_f / n as f64;

        let mut res = Vec::with_capacity(3 + 4 * n);
        let e = traj.final_position() - self.p_tg;
        res.extend(e.iter().map(|v| v * w.w_terminal.sqrt()));
        for f in [&d.f_l, &d.f_r] {
            for k in 1..n {
                res.push(w.w_s.sqrt() * (f[k] - f[k - 1]));
            }
        }
        if w.w_hw > 0.0 {
            for k in 0..n {
                let q = &traj.states[k];
                for (f, ld) in [(d.f_l[k], q.l1_dot), (d.f_r[k], q.l2_dot)] {
                    let power = ((f * ld).powi(2) + HOIST_DELTA * HOIST_DELTA).sqrt();
                    res.push((w.w_hw * power * dt).sqrt());
                }
            }
        }

        let mut g = Vec::with_capacity(7 + n + 1);
        g.extend(self.leg_constraints(&d.f_leg));
        g.push(e.norm_squared() / (w.slack * w.slack) - 1.0);
        for p in &traj.positions {
            g.push(self.path_constraint(p));
        }
        let r = DVector::from_vec(res);
        Ok(Evaluation { objective: 0.5 * r.norm_squared(), constraints: DVector::from_vec(g), residuals: Some(r) })
    }
}

fn check_endpoints(p0: &Vec3, p_tg: &Vec3, scenario: &Scenario, weights: &PlannerWeights) -> Result<()> {
    for (name, p) in [("start", p0), ("target", p_tg)] {
        if scenario.wall_distance(p) < 0.0 {
            return Err(Error::InfeasibleTarget(format!("{name} {p:?} lies behind the wall")));
        }
        inverse_kinematics(p, scenario).map_err(|e| Error::InfeasibleTarget(format!("{name}: {e}")))?;
    }
    if let Some(o) = &scenario.obstacle {
        let min_x = obstacle_min_x(p_tg.y, p_tg.z, o, weights.clearance, scenario.wall_offset);
        if p_tg.x + weights.slack < min_x {
            return Err(Error::InfeasibleTarget(format!("target is within the obstacle clearance (needs x >= {min_x:.3} m)")));
        }
    }
    Ok(())
}

/// Bound and path violations of a plan, recomputed from its inputs.
pub fn audit_plan(plan: &JumpPlan, scenario: &Scenario, weights: &PlannerWeights) -> f64 {
    let mut worst: f64 = 0.0;
    for f in plan.f_r_left.iter().chain(&plan.f_r_right) {
        worst = worst.max(f - 0.0).max(-scenario.f_r_max - f);
    }
    let n = scenario.contact_normal;
    let frame = contact_frame(&n);
    let fn_ = n.dot(&plan.f_leg);
    worst = worst.max(-fn_).max(fn_ - scenario.f_leg_max);
    for t in [frame.column(0).into_owned(), frame.column(1).into_owned()] {
        worst = worst.max(t.dot(&plan.f_leg).abs() - scenario.mu * fn_);
    }
    worst = worst.max(weights.t_f_min - plan.t_f).max(plan.t_f - weights.t_f_max);
    for p in &plan.positions {
        worst = worst.max(-scenario.wall_distance(p));
        if let Some(o) = &scenario.obstacle {
            worst = worst.max(obstacle_min_x(p.y, p.z, o, weights.clearance, scenario.wall_offset) - p.x);
        }
    }
    worst.max(plan.terminal_error() - weights.slack)
}

/// Optimize a jump from rest at `p0` to `p_tg`.
pub fn plan_jump(p0: &Vec3, p_tg: &Vec3, scenario: &Scenario, weights: &PlannerWeights, cfg: &PlannerConfig) -> Result<JumpPlan> {
    scenario.validate()?;
    weights.check()?;
    if cfg.n_sub == 0 {
        return Err(Error::invalid("planner", "n_sub must be >= 1"));
    }
    check_endpoints(p0, p_tg, scenario, weights)?;
    let q0 = rest_state(p0, scenario)?;
    let frame = contact_frame(&scenario.contact_normal);
    let problem = JumpProblem {
        scenario,
        weights,
        cfg,
        q0,
        p_tg: *p_tg,
        t1: frame.column(0).into_owned(),
        t2: frame.column(1).into_owned(),
    };

    let n = weights.n_knots;
    let (fl, fr) = static_rope_forces(p0, scenario);
    let f_leg = scenario.contact_normal * (0.3 * scenario.f_leg_max);
    let t_f = 2.0f64.clamp(weights.t_f_min, weights.t_f_max);
    let z0 = problem.encode(&f_leg, &vec![fl; n], &vec![fr; n], t_f);

    let opts = NlpOptions {
        tol_stat: 1e-4,
        tol_feas: 1e-9,
        max_iters: cfg.max_iters,
        fd: FdScheme::Forward,
        initial_trust: 0.3,
    };
    let sol = solve_nlp(&problem, &z0, &opts)?;
    let d = problem.decode(&sol.x);
    let traj = simulate_plan_inputs(&q0, &d.f_leg, &d.f_l, &d.f_r, d.t_f, cfg.method, cfg.n_sub, scenario)?;
    let mut plan = JumpPlan {
        p0: *p0,
        p_tg: *p_tg,
        f_leg: d.f_leg,
        f_r_left: d.f_l,
        f_r_right: d.f_r,
        t_f: d.t_f,
        t_th: scenario.t_th,
        method: cfg.method,
        n_sub: cfg.n_sub,
        states: traj.states,
        positions: traj.positions,
        report: SolveReport {
            status: sol.status,
            iterations: sol.iterations,
            kkt_residual: sol.kkt_residual,
            objective: sol.objective,
            audit_violation: 0.0,
        },
    };
    plan.report.audit_violation = audit_plan(&plan, scenario, weights);
    log::debug!("plan: status {:?}, {} iterations, audit {:.2e}", sol.status, sol.iterations, plan.report.audit_violation);
    if sol.status == NlpStatus::Infeasible || plan.report.audit_violation > 1e-6 {
        return Err(Error::Solver(format!(
            "jump optimization ended {:?} after {} iterations: constraint violation {:.3e}, terminal error {:.4} m, KKT residual {:.3e}",
            sol.status,
            sol.iterations,
            plan.report.audit_violation,
            plan.terminal_error(),
            sol.kkt_residual
        )));
    }
    Ok(plan)
}

/// One row of the integration-scheme comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_knots: usize,
    pub method: Method,
    /// Substeps per knot as requested; 0 means a single step per knot.
    pub n_sub: usize,
    pub iterations: usize,
    pub solve_seconds: f64,
    /// Planned end position against a fine re-integration of the same inputs.
    pub integration_error: f64,
    /// Target against the fine re-integration.
    pub landing_error: f64,
}

/// Fine re-integration step used as ground truth.
pub const REFERENCE_STEP: f64 = 1e-4;

/// Plan with the given discretisation and measure its integration error.
pub fn bench_integrator(p0: &Vec3, p_tg: &Vec3, scenario: &Scenario, weights: &PlannerWeights, method: Method, n_sub: usize, max_iters: usize) -> Result<BenchRow> {
    let cfg = PlannerConfig { method, n_sub: n_sub.max(1), max_iters };
    let start = std::time::Instant::now();
    let plan = plan_jump(p0, p_tg, scenario, weights, &cfg)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let fine = reintegrate(&plan, scenario, REFERENCE_STEP)?;
    let end = fine.final_position();
    Ok(BenchRow {
        n_knots: weights.n_knots,
        method,
        n_sub,
        iterations: plan.report.iterations,
        solve_seconds,
        integration_error: (plan.positions[plan.positions.len() - 1] - end).norm(),
        landing_error: (p_tg - end).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ellipsoid() -> Ellipsoid {
        Ellipsoid::new(Vec3::new(-0.5, 2.5, -6.0), Vec3::new(1.5, 1.5, 0.87)).unwrap()
    }

    #[test]
    fn obstacle_apex() {
        let o = ellipsoid();
        assert_relative_eq!(obstacle_min_x(2.5, -6.0, &o, 1.0, 0.0), -0.5 + 1.5 + 1.0);
    }

    #[test]
    fn obstacle_far_away_falls_back_to_wall() {
        assert_eq!(obstacle_min_x(10.0, -6.0, &ellipsoid(), 1.0, 0.07), 0.07);
    }

    #[test]
    fn obstacle_bound_lies_on_the_surface() {
        let o = ellipsoid();
        for (y, z) in [(2.0, -6.3), (3.1, -5.5), (1.2, -6.1), (2.5, -6.8)] {
            let x = obstacle_min_x(y, z, &o, 1.0, 0.0) - 1.0;
            assert!((o.level(&Vec3::new(x, y, z)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn obstacle_constraint_is_continuous_and_consistent() {
        let o = ellipsoid();
        for (x, y, z) in [(0.2, 2.5, -6.0), (3.5, 2.5, -6.0), (0.1, 5.0, -6.0), (1.2, 2.0, -6.6)] {
            let p = Vec3::new(x, y, z);
            let ok = p.x >= obstacle_min_x(y, z, &o, 1.0, f64::NEG_INFINITY);
            assert_eq!(obstacle_constraint(&p, &o, 1.0) <= 0.0, ok, "{p:?}");
        }
    }

    fn toy_plan(n: usize, t_f: f64) -> JumpPlan {
        let positions: Vec<Vec3> = (0..=n).map(|k| Vec3::new(0.2 + (k as f64).sin(), k as f64, -(k as f64).powi(2))).collect();
        JumpPlan {
            p0: positions[0],
            p_tg: positions[n],
            f_leg: Vec3::zeros(),
            f_r_left: vec![0.0; n],
            f_r_right: vec![0.0; n],
            t_f,
            t_th: 0.05,
            method: Method::Rk4,
            n_sub: 1,
            states: vec![ReducedState::default(); n + 1],
            positions,
            report: SolveReport { status: NlpStatus::Optimal, iterations: 0, kkt_residual: 0.0, objective: 0.0, audit_violation: 0.0 },
        }
    }

    #[test]
    fn reference_at_knot_rate_is_identity() {
        let plan = toy_plan(12, 1.8);
        let r = map_plan_to_reference(&plan, plan.dt());
        assert_eq!(r.len(), 13);
        for (a, b) in r.iter().zip(&plan.positions) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_then_subsample_recovers_knots() {
        let plan = toy_plan(10, 2.0);
        let r = map_plan_to_reference(&plan, plan.dt() / 4.0);
        for k in 0..=10 {
            assert_relative_eq!(r[4 * k], plan.positions[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn interpolated_points_sit_on_segments() {
        let plan = toy_plan(10, 2.0);
        let dt = 0.037;
        for (j, p) in map_plan_to_reference(&plan, dt).iter().enumerate() {
            let k = ((j as f64 * dt / plan.dt()).floor() as usize).min(9);
            let (a, b) = (plan.positions[k], plan.positions[k + 1]);
            let t = (p - a).dot(&(b - a)) / (b - a).norm_squared();
            assert!((-1e-9..=1.0 + 1e-9).contains(&t));
            assert!((a + (b - a) * t - p).norm() < 1e-9);
        }
    }

    #[test]
    fn target_behind_wall_is_rejected() {
        let s = Scenario::default();
        let r = plan_jump(&Vec3::new(0.2, 2.5, -6.0), &Vec3::new(-0.3, 4.0, -4.0), &s, &PlannerWeights::default(), &PlannerConfig::default());
        assert!(matches!(r, Err(Error::InfeasibleTarget(_))));
    }

    #[test]
    fn static_forces_hold_a_hanging_mass() {
        let s = Scenario::default();
        let p = Vec3::new(0.0, 2.5, -6.0);
        let (fl, fr) = static_rope_forces(&p, &s);
        let (al, ar) = rope_axes(&p, &s);
        assert!((al * fl + ar * fr + s.weight()).norm() < 1e-9);
        assert!(fl < 0.0 && fr < 0.0);
    }
}
