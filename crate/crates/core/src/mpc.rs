//! Receding-horizon flight controller.
//!
//! Decision per horizon knot: deviations of both rope forces from the planned
//! feed-forward plus the propeller force. Tracking starts at the first
//! predicted knot (the current position cannot be influenced) and input
//! smoothing acts on the deviations, with the previously applied deviation
//! closing the chain at the first knot.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::integrator::{rollout, IntegratorConfig};
use crate::model::{ControlInput, ReducedState};
use crate::optim::fd::FdScheme;
use crate::optim::{solve_nlp, Evaluation, NlpOptions, NlpProblem, NlpStatus};
use crate::planner::{map_plan_to_reference, JumpPlan};
use crate::scenario::{Scenario, Vec3};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    /// Horizon knots; `None` uses `round(0.4 N)` of the plan.
    pub n_mpc: Option<usize>,
    /// Control period; `None` uses the plan knot interval.
    pub dt_mpc: Option<f64>,
    pub w_p: f64,
    pub w_u: f64,
    pub w_pf: f64,
    pub max_iters: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig { n_mpc: None, dt_mpc: None, w_p: 1.0, w_u: 1e-5, w_pf: 0.0, max_iters: 30 }
    }
}

impl MpcConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_mpc.is_some_and(|n| n < 2) {
            return Err(Error::invalid("mpc", "n_mpc must be >= 2"));
        }
        if self.dt_mpc.is_some_and(|dt| !(dt > 0.0)) {
            return Err(Error::invalid("mpc", "dt_mpc must be > 0 s"));
        }
        if [self.w_p, self.w_u, self.w_pf].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mpc", "weights must be >= 0"));
        }
        Ok(())
    }

    pub fn horizon_for(&self, plan: &JumpPlan) -> usize {
        self.n_mpc.unwrap_or_else(|| ((0.4 * plan.n_knots() as f64).round() as usize).max(2))
    }

    pub fn period_for(&self, plan: &JumpPlan) -> f64 {
        self.dt_mpc.unwrap_or_else(|| plan.dt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcSolution {
    pub delta_left: Vec<f64>,
    pub delta_right: Vec<f64>,
    pub f_p: Vec<f64>,
    pub predicted: Vec<Vec3>,
    pub status: Option<NlpStatus>,
    pub iterations: usize,
    pub objective: f64,
    /// Set when the solver failed and the warm start was returned instead.
    pub degraded: bool,
}

impl MpcSolution {
    pub fn horizon(&self) -> usize {
        self.delta_left.len()
    }

    pub fn zeros(horizon: usize) -> Self {
        MpcSolution {
            delta_left: vec![0.0; horizon],
            delta_right: vec![0.0; horizon],
            f_p: vec![0.0; horizon],
            predicted: Vec::new(),
            status: None,
            iterations: 0,
            objective: 0.0,
            degraded: false,
        }
    }
}

/// Effective horizon at reference index `k` of a reference with `len` intervals.
pub fn shrink_horizon(k: usize, n_mpc: usize, len: usize) -> usize {
    n_mpc.min(len.saturating_sub(k)).max(1)
}

/// Shift the previous solution by one knot, repeating its last knot.
pub fn warm_start_from(prev: Option<&MpcSolution>, horizon: usize) -> MpcSolution {
    let Some(prev) = prev.filter(|p| p.horizon() > 0) else {
        return MpcSolution::zeros(horizon);
    };
    let last = prev.horizon() - 1;
    let pick = |v: &[f64]| (0..horizon).map(|i| v[(i + 1).min(last)]).collect::<Vec<_>>();
    MpcSolution {
        delta_left: pick(&prev.delta_left),
        delta_right: pick(&prev.delta_right),
        f_p: pick(&prev.f_p),
        predicted: Vec::new(),
        status: None,
        iterations: 0,
        objective: 0.0,
        degraded: false,
    }
}

/// Planned rope forces sampled on the controller clock (zero-order hold).
pub fn feed_forward(plan: &JumpPlan, t: f64) -> (f64, f64) {
    let k = ((t / plan.dt() + 1e-9).floor() as usize).min(plan.n_knots() - 1);
    (plan.f_r_left[k], plan.f_r_right[k])
}

/// Bounds on the deviations around a feed-forward value.
fn deviation_bounds(f_star: f64, f_r_max: f64) -> (f64, f64) {
    (-f_r_max - f_star, -f_star)
}

struct HorizonProblem<'a> {
    scenario: &'a Scenario,
    cfg: &'a MpcConfig,
    x0: ReducedState,
    integ: IntegratorConfig,
    p_ref: Vec<Vec3>,
    ff: Vec<(f64, f64)>,
    prev_delta: (f64, f64, f64),
    use_prop: bool,
}

impl HorizonProblem<'_> {
    fn h(&self) -> usize {
        self.ff.len()
    }

    fn vars_per_knot(&self) -> usize {
        if self.use_prop {
            3
        } else {
            2
        }
    }

    fn unpack(&self, z: &DVector<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let v = self.vars_per_knot();
        let s = self.scenario;
        let dl = (0..self.h()).map(|i| z[v * i] * s.f_r_max).collect();
        let dr = (0..self.h()).map(|i| z[v * i + 1] * s.f_r_max).collect();
        let fp = (0..self.h()).map(|i| if self.use_prop { z[v * i + 2] * s.f_p_max } else { 0.0 }).collect();
        (dl, dr, fp)
    }

    fn pack(&self, sol: &MpcSolution) -> DVector<f64> {
        let v = self.vars_per_knot();
        let s = self.scenario;
        let mut z = DVector::zeros(v * self.h());
        for i in 0..self.h() {
            z[v * i] = sol.delta_left[i] / s.f_r_max;
            z[v * i + 1] = sol.delta_right[i] / s.f_r_max;
            if self.use_prop {
                z[v * i + 2] = sol.f_p[i] / s.f_p_max;
            }
        }
        z
    }

    fn schedule(&self, z: &DVector<f64>) -> Vec<ControlInput> {
        let (dl, dr, fp) = self.unpack(z);
        (0..self.h())
            .map(|i| ControlInput {
                f_r_left: (self.ff[i].0 + dl[i]).min(0.0),
                f_r_right: (self.ff[i].1 + dr[i]).min(0.0),
                f_leg: Vec3::zeros(),
                f_p: fp[i],
            })
            .collect()
    }
}

impl NlpProblem for HorizonProblem<'_> {
    fn dim(&self) -> usize {
        self.vars_per_knot() * self.h()
    }

    fn lower(&self) -> DVector<f64> {
        let v = self.vars_per_knot();
        let s = self.scenario;
        DVector::from_fn(self.dim(), |j, _| {
            let (i, c) = (j / v, j % v);
            match c {
                0 => deviation_bounds(self.ff[i].0, s.f_r_max).0 / s.f_r_max,
                1 => deviation_bounds(self.ff[i].1, s.f_r_max).0 / s.f_r_max,
                _ => -1.0,
            }
        })
    }

    fn upper(&self) -> DVector<f64> {
        let v = self.vars_per_knot();
        let s = self.scenario;
        DVector::from_fn(self.dim(), |j, _| {
            let (i, c) = (j / v, j % v);
            match c {
                0 => deviation_bounds(self.ff[i].0, s.f_r_max).1 / s.f_r_max,
                1 => deviation_bounds(self.ff[i].1, s.f_r_max).1 / s.f_r_max,
                _ => 1.0,
            }
        })
    }

    fn evaluate(&self, z: &DVector<f64>) -> Result<Evaluation> {
        let traj = rollout(&self.x0, &self.schedule(z), &self.integ, self.scenario)?;
        let h = self.h();
        let (dl, dr, fp) = self.unpack(z);
        let mut res = Vec::with_capacity(3 * h + 3 + 3 * h);
        let wp = self.cfg.w_p.sqrt();
        for i in 1..=h {
            let e = traj.positions[i] - self.p_ref[i];
            res.extend(e.iter().map(|v| v * wp));
        }
        if self.cfg.w_pf > 0.0 {
            let e = traj.positions[h] - self.p_ref[h];
            res.extend(e.iter().map(|v| v * self.cfg.w_pf.sqrt()));
        }
        let wu = self.cfg.w_u.sqrt();
        let (mut pl, mut pr, mut pp) = self.prev_delta;
        for i in 0..h {
            res.push(wu * (dl[i] - pl));
            res.push(wu * (dr[i] - pr));
            if self.use_prop {
                res.push(wu * (fp[i] - pp));
            }
            (pl, pr, pp) = (dl[i], dr[i], fp[i]);
        }
        let r = DVector::from_vec(res);
        Ok(Evaluation { objective: 0.5 * r.norm_squared(), constraints: DVector::zeros(0), residuals: Some(r) })
    }
}

/// Closed-loop controller state across receding-horizon steps.
#[derive(Clone, Debug)]
pub struct MpcController {
    pub cfg: MpcConfig,
    pub reference: Vec<Vec3>,
    pub period: f64,
    pub n_mpc: usize,
    prev: Option<MpcSolution>,
    /// Deviation applied at the previous control period.
    applied: (f64, f64, f64),
}

impl MpcController {
    pub fn new(plan: &JumpPlan, cfg: MpcConfig) -> Result<Self> {
        cfg.check()?;
        let period = cfg.period_for(plan);
        let reference = map_plan_to_reference(plan, period);
        let n_mpc = cfg.horizon_for(plan);
        Ok(MpcController { cfg, reference, period, n_mpc, prev: None, applied: (0.0, 0.0, 0.0) })
    }

    /// Number of control intervals covering the flight.
    pub fn len(&self) -> usize {
        self.reference.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Optimize at reference index `k` from estimated state `x_hat` and return
    /// the input to apply now.
    pub fn command(&mut self, k: usize, x_hat: &ReducedState, plan: &JumpPlan, scenario: &Scenario) -> Result<(ControlInput, MpcSolution)> {
        let sol = mpc_step(x_hat, k, plan, self, scenario)?;
        let (fl, fr) = feed_forward(plan, k as f64 * self.period);
        let u = ControlInput {
            f_r_left: (fl + sol.delta_left[0]).clamp(-scenario.f_r_max, 0.0),
            f_r_right: (fr + sol.delta_right[0]).clamp(-scenario.f_r_max, 0.0),
            f_leg: Vec3::zeros(),
            f_p: sol.f_p[0].clamp(-scenario.f_p_max, scenario.f_p_max),
        };
        self.applied = (u.f_r_left - fl, u.f_r_right - fr, u.f_p);
        self.prev = Some(sol.clone());
        Ok((u, sol))
    }
}

/// One receding-horizon optimization at reference index `k`.
pub fn mpc_step(x_hat: &ReducedState, k: usize, plan: &JumpPlan, ctrl: &MpcController, scenario: &Scenario) -> Result<MpcSolution> {
    if !x_hat.is_finite() {
        return Err(Error::NonFinite);
    }
    let len = ctrl.len();
    if k >= len {
        return Err(Error::invalid("mpc", format!("reference index {k} beyond horizon end {len}")));
    }
    let h = shrink_horizon(k, ctrl.n_mpc, len);
    let p_ref = (0..=h).map(|i| ctrl.reference[k + i]).collect();
    let ff = (0..h).map(|i| feed_forward(plan, (k + i) as f64 * ctrl.period)).collect();
    let use_prop = scenario.f_p_max > 0.0;
    let problem = HorizonProblem {
        scenario,
        cfg: &ctrl.cfg,
        x0: *x_hat,
        integ: IntegratorConfig { method: plan.method, n_sub: plan.n_sub, dt: ctrl.period },
        p_ref,
        ff,
        prev_delta: ctrl.applied,
        use_prop,
    };
    let warm = warm_start_from(ctrl.prev.as_ref(), h);
    let z0 = problem.pack(&warm);
    let opts = NlpOptions {
        tol_stat: 1e-9,
        tol_feas: 1e-9,
        max_iters: ctrl.cfg.max_iters,
        fd: FdScheme::Forward,
        initial_trust: 0.5,
    };
    let degraded = |why: String| {
        log::warn!("mpc step {k} degraded: {why}");
        MpcSolution { degraded: true, ..warm.clone() }
    };
    let sol = match solve_nlp(&problem, &z0, &opts) {
        Ok(s) => s,
        Err(e) => return Ok(degraded(e.to_string())),
    };
    let (dl, dr, fp) = problem.unpack(&sol.x);
    let predicted = match rollout(x_hat, &problem.schedule(&sol.x), &problem.integ, scenario) {
        Ok(t) => t.positions,
        Err(e) => return Ok(degraded(e.to_string())),
    };
    Ok(MpcSolution {
        delta_left: dl,
        delta_right: dr,
        f_p: fp,
        predicted,
        status: Some(sol.status),
        iterations: sol.iterations,
        objective: sol.objective,
        degraded: false,
    })
}
