//! Closed-loop point-mass simulation of a jump: thrust, flight and, for
//! landing runs, wall contact.
//!
//! The true state is integrated with RK4 at the simulation step. Controller
//! inputs are held between controller ticks; measurement noise only corrupts
//! the copy of the state handed to the controller.

use nalgebra::Vector6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{dynamics_with_disturbance, forward_kinematics, propeller_axis, Chart, ControlInput, ReducedState};
use crate::mpc::{feed_forward, MpcConfig, MpcController};
use crate::planner::{static_rope_forces, JumpPlan};
use crate::scenario::{Scenario, Vec3};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// Applied for the whole flight.
    Constant { force: Vec3 },
    /// Applied on `[start, start + duration)` measured from lift-off.
    Impulsive { force: Vec3, start: f64, duration: f64 },
}

/// Default persistence of an impulsive disturbance.
pub const IMPULSE_DURATION: f64 = 0.2;

impl DisturbanceSpec {
    pub fn impulsive(force: Vec3, start: f64) -> Self {
        DisturbanceSpec::Impulsive { force, start, duration: IMPULSE_DURATION }
    }

    /// Force at flight time `tau` (seconds after lift-off).
    pub fn at(&self, tau: f64) -> Vec3 {
        match self {
            DisturbanceSpec::None => Vec3::zeros(),
            DisturbanceSpec::Constant { force } => *force,
            DisturbanceSpec::Impulsive { force, start, duration } => {
                if tau >= *start && tau < start + duration {
                    *force
                } else {
                    Vec3::zeros()
                }
            }
        }
    }

    pub fn check(&self, t_f: f64) -> Result<()> {
        let bad = |r: &str| Err(Error::invalid("disturbance", r.to_string()));
        match self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Constant { force } if !force.iter().all(|v| v.is_finite()) => bad("force must be finite"),
            DisturbanceSpec::Constant { .. } => Ok(()),
            DisturbanceSpec::Impulsive { force, start, duration } => {
                if !force.iter().all(|v| v.is_finite()) {
                    return bad("force must be finite");
                }
                if !(*start >= 0.0 && *duration >= 0.0 && start + duration <= t_f + 1e-9) {
                    return bad("window must lie within the flight phase");
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Standard deviations on (psi_dot, l1_dot, l2_dot).
    pub sigma: [f64; 3],
    pub seed: u64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|s| *s == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Controller {
    OpenLoop,
    Mpc(MpcConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt_sim: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt_sim: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Thrust,
    Flight,
    /// After the planned horizon, waiting for a delayed touch-down.
    Hold,
    Contact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    LiftOff { t: f64 },
    TouchDown { t: f64, early: bool },
    HorizonEnd { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub phase: Phase,
    pub state: ReducedState,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Input held from `t` to the next row.
    pub input: ControlInput,
    pub disturbance: Vec3,
    /// Wall reaction along the wall normal (landing runs).
    pub contact_force: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<Event>,
    pub target: Vec3,
    /// `p_tg - p(end)`.
    pub landing_error: Vec3,
    pub mpc_solves: usize,
    pub degraded_solves: usize,
    /// Set when the run was aborted; the rows hold the trajectory so far.
    pub failure: Option<String>,
}

impl SimTrace {
    pub fn lift_off_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            Event::LiftOff { t } => Some(*t),
            _ => None,
        })
    }

    pub fn touch_down(&self) -> Option<(f64, bool)> {
        self.events.iter().find_map(|e| match e {
            Event::TouchDown { t, early } => Some((*t, *early)),
            _ => None,
        })
    }

    pub fn final_position(&self) -> Vec3 {
        self.rows.last().map(|r| r.position).unwrap_or_default()
    }
}

struct Stepper<'a> {
    scenario: &'a Scenario,
    h: f64,
}

impl Stepper<'_> {
    /// One RK4 step with an extra state-dependent force.
    fn step(&self, q: &ReducedState, u: &ControlInput, extra: &dyn Fn(&ReducedState) -> Result<Vec3>) -> Result<ReducedState> {
        let s = self.scenario;
        let f = |x: &Vector6<f64>| -> Result<Vector6<f64>> {
            let q = ReducedState::from_array([x[0], x[1], x[2], x[3], x[4], x[5]]);
            let qdd = dynamics_with_disturbance(&q, u, &extra(&q)?, s)?;
            Ok(Vector6::new(x[3], x[4], x[5], qdd[0], qdd[1], qdd[2]))
        };
        let x = Vector6::from(q.to_array());
        let h = self.h;
        let k1 = f(&x)?;
        let k2 = f(&(x + k1 * (h / 2.0)))?;
        let k3 = f(&(x + k2 * (h / 2.0)))?;
        let k4 = f(&(x + k3 * h))?;
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ReducedState::from_array([next[0], next[1], next[2], next[3], next[4], next[5]]))
    }
}

fn kinematics(q: &ReducedState, s: &Scenario) -> Result<(Vec3, Vec3)> {
    let chart = Chart::new(q, s)?;
    Ok((chart.position, chart.jacobian * q.qd()))
}

struct Recorder<'a> {
    scenario: &'a Scenario,
    trace: SimTrace,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, phase: Phase, q: &ReducedState, u: &ControlInput, disturbance: Vec3, contact_force: f64) -> Result<()> {
        let (position, velocity) = kinematics(q, self.scenario)?;
        self.trace.rows.push(TraceRow { t, phase, state: *q, position, velocity, input: *u, disturbance, contact_force });
        Ok(())
    }

    fn finish(mut self, q: &ReducedState, t: f64, phase: Phase, failure: Option<Error>) -> SimTrace {
        if let Ok((position, velocity)) = kinematics(q, self.scenario) {
            self.trace.rows.push(TraceRow {
                t,
                phase,
                state: *q,
                position,
                velocity,
                input: ControlInput::default(),
                disturbance: Vec3::zeros(),
                contact_force: 0.0,
            });
        }
        self.trace.landing_error = self.trace.target - self.trace.final_position();
        self.trace.failure = failure.map(|e| e.to_string());
        self.trace
    }
}

fn noisy(q: &ReducedState, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> ReducedState {
    if noise.is_zero() {
        return *q;
    }
    let mut m = *q;
    let mut draw = |sigma: f64| Normal::new(0.0, sigma).map(|d| d.sample(&mut *rng)).unwrap_or(0.0);
    m.psi_dot += draw(noise.sigma[0]);
    m.l1_dot += draw(noise.sigma[1]);
    m.l2_dot += draw(noise.sigma[2]);
    m
}

/// Wall contact parameters for landing runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandingParams {
    /// Normal stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N s/m).
    pub damping: f64,
    /// Lateral damping of the wheels while in contact (N s/m).
    pub lateral_damping: f64,
    /// Wall distance of the CoM at first contact; `None` uses the target's.
    pub standoff: Option<f64>,
    /// Push the robot against the wall with the propeller while in contact.
    pub propeller_push: bool,
    /// Simulated time after touch-down (s).
    pub settle: f64,
    /// Longest wait for a delayed touch-down after the horizon (s).
    pub max_hold: f64,
}

impl Default for LandingParams {
    fn default() -> Self {
        LandingParams {
            stiffness: 60.0,
            damping: 10.0,
            lateral_damping: 60.0,
            standoff: None,
            propeller_push: true,
            settle: 2.0,
            max_hold: 2.0,
        }
    }
}

/// Normal reaction of the unilateral spring-damper; `delta` is the
/// penetration past the contact plane and `delta_dot` its rate.
pub fn contact_force(delta: f64, delta_dot: f64, stiffness: f64, damping: f64) -> f64 {
    if delta <= 0.0 {
        0.0
    } else {
        (stiffness * delta + damping * delta_dot).max(0.0)
    }
}

/// One-dimensional mass hitting a unilateral spring-damper with velocity
/// `v0` while a constant force `push` presses it in. Returns `(t, delta, delta_dot)`.
pub fn contact_1d(mass: f64, stiffness: f64, damping: f64, v0: f64, push: f64, dt: f64, t_end: f64) -> Vec<(f64, f64, f64)> {
    let acc = |d: f64, v: f64| (push - contact_force(d, v, stiffness, damping)) / mass;
    let (mut d, mut v) = (0.0, v0);
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, d, v));
    for i in 0..steps {
        let (k1d, k1v) = (v, acc(d, v));
        let (k2d, k2v) = (v + 0.5 * dt * k1v, acc(d + 0.5 * dt * k1d, v + 0.5 * dt * k1v));
        let (k3d, k3v) = (v + 0.5 * dt * k2v, acc(d + 0.5 * dt * k2d, v + 0.5 * dt * k2v));
        let (k4d, k4v) = (v + dt * k3v, acc(d + dt * k3d, v + dt * k3v));
        d += dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push(((i + 1) as f64 * dt, d, v));
    }
    out
}

struct Flight<'a> {
    plan: &'a JumpPlan,
    scenario: &'a Scenario,
    mpc: Option<MpcController>,
    period: f64,
    ticks: usize,
}

impl<'a> Flight<'a> {
    fn new(plan: &'a JumpPlan, controller: &Controller, scenario: &'a Scenario) -> Result<Self> {
        Ok(match controller {
            Controller::OpenLoop => Flight { plan, scenario, mpc: None, period: plan.dt(), ticks: plan.n_knots() },
            Controller::Mpc(cfg) => {
                let c = MpcController::new(plan, cfg.clone())?;
                let (period, ticks) = (c.period, c.len());
                Flight { plan, scenario, mpc: Some(c), period, ticks }
            }
        })
    }

    fn command(&mut self, k: usize, measured: &ReducedState, trace: &mut SimTrace) -> Result<ControlInput> {
        match &mut self.mpc {
            None => {
                let (fl, fr) = feed_forward(self.plan, k as f64 * self.period);
                Ok(ControlInput::ropes(fl, fr))
            }
            Some(c) => {
                let (u, sol) = c.command(k, measured, self.plan, self.scenario)?;
                trace.mpc_solves += 1;
                if sol.degraded {
                    trace.degraded_solves += 1;
                }
                Ok(u)
            }
        }
    }
}

fn new_trace(plan: &JumpPlan) -> SimTrace {
    SimTrace {
        rows: Vec::new(),
        events: Vec::new(),
        target: plan.p_tg,
        landing_error: Vec3::zeros(),
        mpc_solves: 0,
        degraded_solves: 0,
        failure: None,
    }
}

/// Thrust from rest at the plan start; returns the lift-off state and time.
fn thrust(plan: &JumpPlan, scenario: &Scenario, cfg: &SimConfig, rec: &mut Recorder) -> Result<(ReducedState, f64)> {
    let mut q = plan.initial_state(scenario)?;
    let n = (scenario.t_th / cfg.dt_sim).ceil().max(1.0) as usize;
    let stepper = Stepper { scenario, h: scenario.t_th / n as f64 };
    let u = plan.thrust_input();
    let none = |_: &ReducedState| Ok(Vec3::zeros());
    for i in 0..n {
        rec.push(i as f64 * stepper.h, Phase::Thrust, &q, &u, Vec3::zeros(), 0.0)?;
        q = stepper.step(&q, &u, &none)?;
    }
    rec.trace.events.push(Event::LiftOff { t: scenario.t_th });
    Ok((q, scenario.t_th))
}

fn check_inputs(plan: &JumpPlan, disturbance: &DisturbanceSpec, noise: &NoiseSpec, cfg: &SimConfig) -> Result<()> {
    if !(cfg.dt_sim > 0.0) {
        return Err(Error::invalid("simulation", "dt_sim must be > 0 s"));
    }
    if noise.sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::invalid("noise", "standard deviations must be >= 0"));
    }
    disturbance.check(plan.t_f)
}

/// Simulate thrust and flight up to the end of the planned horizon.
pub fn run_episode(
    plan: &JumpPlan,
    controller: &Controller,
    disturbance: &DisturbanceSpec,
    noise: &NoiseSpec,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    check_inputs(plan, disturbance, noise, cfg)?;
    let mut rec = Recorder { scenario, trace: new_trace(plan) };
    let mut flight = Flight::new(plan, controller, scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);

    let (mut q, t0) = match thrust(plan, scenario, cfg, &mut rec) {
        Ok(v) => v,
        Err(e) => {
            let q = plan.initial_state(scenario)?;
            return Ok(rec.finish(&q, 0.0, Phase::Thrust, Some(e)));
        }
    };
    let m = (flight.period / cfg.dt_sim - 1e-9).ceil().max(1.0) as usize;
    let stepper = Stepper { scenario, h: flight.period / m as f64 };
    let mut t = t0;
    for k in 0..flight.ticks {
        let measured = noisy(&q, noise, &mut rng);
        let u = match flight.command(k, &measured, &mut rec.trace) {
            Ok(u) => u,
            Err(e) => return Ok(rec.finish(&q, t, Phase::Flight, Some(e))),
        };
        for i in 0..m {
            let tau = k as f64 * flight.period + i as f64 * stepper.h;
            let w = disturbance.at(tau);
            let outcome = rec
                .push(t, Phase::Flight, &q, &u, w, 0.0)
                .and_then(|_| stepper.step(&q, &u, &|_: &ReducedState| Ok(w)));
            match outcome {
                Ok(next) => q = next,
                Err(e) => return Ok(rec.finish(&q, t, Phase::Flight, Some(e))),
            }
            t = t0 + k as f64 * flight.period + (i + 1) as f64 * stepper.h;
        }
    }
    rec.trace.events.push(Event::HorizonEnd { t });
    Ok(rec.finish(&q, t, Phase::Flight, None))
}

/// Inputs while pressed on (or waiting for) the wall: ropes compensate
/// gravity and the propeller optionally pushes toward the wall.
fn holding_input(q: &ReducedState, scenario: &Scenario, push: bool) -> Result<ControlInput> {
    let p = forward_kinematics(q, scenario)?;
    let (fl, fr) = static_rope_forces(&p, scenario);
    let axis = propeller_axis(q);
    let toward_wall = -axis.dot(&scenario.wall_normal).signum();
    let f_p = if push { toward_wall * scenario.f_p_max } else { 0.0 };
    Ok(ControlInput { f_r_left: fl, f_r_right: fr, f_leg: Vec3::zeros(), f_p })
}

/// Flight followed by touch-down on the wall and a settling period.
pub fn landing_episode(
    plan: &JumpPlan,
    controller: &Controller,
    params: &LandingParams,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    if !(params.stiffness >= 0.0 && params.damping >= 0.0 && params.lateral_damping >= 0.0) {
        return Err(Error::invalid("landing", "gains must be >= 0"));
    }
    check_inputs(plan, &DisturbanceSpec::None, &NoiseSpec::default(), cfg)?;
    let n = scenario.wall_normal;
    let standoff = params.standoff.unwrap_or_else(|| scenario.wall_distance(&plan.p_tg));
    let mut rec = Recorder { scenario, trace: new_trace(plan) };
    let mut flight = Flight::new(plan, controller, scenario)?;

    let (mut q, t0) = thrust(plan, scenario, cfg, &mut rec)?;
    let m = (flight.period / cfg.dt_sim - 1e-9).ceil().max(1.0) as usize;
    let stepper = Stepper { scenario, h: flight.period / m as f64 };
    let t_end = t0 + plan.t_f;

    let wall_reaction = |q: &ReducedState| -> Result<(Vec3, f64)> {
        let (p, v) = kinematics(q, scenario)?;
        let delta = standoff - scenario.wall_distance(&p);
        let fn_ = contact_force(delta, -n.dot(&v), params.stiffness, params.damping);
        let v_t = v - n * n.dot(&v);
        Ok((n * fn_ - v_t * params.lateral_damping, fn_))
    };
    let touching = |q: &ReducedState| -> Result<bool> {
        let p = forward_kinematics(q, scenario)?;
        Ok(scenario.wall_distance(&p) <= standoff)
    };

    let mut t = t0;
    let mut contact_since = None;
    let mut phase = Phase::Flight;
    let mut k = 0usize;
    let mut u = ControlInput::default();
    let mut i = 0usize;
    loop {
        if contact_since.is_none() {
            match touching(&q) {
                Ok(true) => {
                    contact_since = Some(t);
                    phase = Phase::Contact;
                    rec.trace.events.push(Event::TouchDown { t, early: t < t_end - 1e-12 });
                }
                Ok(false) => {}
                Err(e) => return Ok(rec.finish(&q, t, phase, Some(e))),
            }
        }
        if let Some(tc) = contact_since {
            if t >= tc + params.settle {
                break;
            }
        } else if t >= t_end + params.max_hold {
            break;
        }
        if phase == Phase::Flight && k >= flight.ticks {
            phase = Phase::Hold;
            rec.trace.events.push(Event::HorizonEnd { t });
        }

        let result = (|| -> Result<(ControlInput, Vec3, f64)> {
            match phase {
                Phase::Flight => {
                    if i.is_multiple_of(m) {
                        u = flight.command(k, &q, &mut rec.trace)?;
                    }
                    Ok((u, Vec3::zeros(), 0.0))
                }
                Phase::Hold => Ok((holding_input(&q, scenario, params.propeller_push)?, Vec3::zeros(), 0.0)),
                _ => {
                    let (f, fn_) = wall_reaction(&q)?;
                    Ok((holding_input(&q, scenario, params.propeller_push)?, f, fn_))
                }
            }
        })();
        let (u_now, _, fn_) = match result {
            Ok(v) => v,
            Err(e) => return Ok(rec.finish(&q, t, phase, Some(e))),
        };
        let in_contact = phase == Phase::Contact;
        let extra = |s: &ReducedState| -> Result<Vec3> { if in_contact { Ok(wall_reaction(s)?.0) } else { Ok(Vec3::zeros()) } };
        if let Err(e) = rec.push(t, phase, &q, &u_now, Vec3::zeros(), fn_) {
            return Ok(rec.finish(&q, t, phase, Some(e)));
        }
        match stepper.step(&q, &u_now, &extra) {
            Ok(next) => q = next,
            Err(e) => return Ok(rec.finish(&q, t, phase, Some(e))),
        }
        i += 1;
        if phase == Phase::Flight && i.is_multiple_of(m) {
            k += 1;
        }
        t = t0 + i as f64 * stepper.h;
    }
    Ok(rec.finish(&q, t, phase, None))
}

/// Longest run of consecutive samples after the first contact whose wall-normal
/// velocity points away from the wall by more than `tol`.
pub fn longest_outward_run(trace: &SimTrace, scenario: &Scenario, tol: f64) -> usize {
    let Some((tc, _)) = trace.touch_down() else {
        return 0;
    };
    let (mut best, mut run) = (0, 0);
    for row in trace.rows.iter().filter(|r| r.t >= tc) {
        if scenario.wall_normal.dot(&row.velocity) > tol {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Random impulsive disturbances for robustness batches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSampler {
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub duration: f64,
    pub intervals: usize,
}

impl Default for DisturbanceSampler {
    fn default() -> Self {
        DisturbanceSampler { amplitude_min: 25.0, amplitude_max: 50.0, duration: IMPULSE_DURATION, intervals: 10 }
    }
}

impl DisturbanceSampler {
    /// Impulse starting inside flight interval `interval`, pointing into the
    /// lower hemisphere.
    pub fn sample(&self, interval: usize, t_f: f64, rng: &mut ChaCha8Rng) -> DisturbanceSpec {
        let width = t_f / self.intervals as f64;
        let latest = (t_f - self.duration).max(0.0);
        let start = ((interval as f64 + rng.random::<f64>()) * width).min(latest);
        let amp = if self.amplitude_max > self.amplitude_min {
            rng.random_range(self.amplitude_min..=self.amplitude_max)
        } else {
            self.amplitude_min
        };
        // Uniform direction on the sphere, reflected into z <= 0.
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let dir = Vec3::new(r * phi.cos(), r * phi.sin(), -z.abs());
        DisturbanceSpec::Impulsive { force: dir * amp, start, duration: self.duration.min(t_f) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub interval: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub seed: u64,
    pub runs_per_interval: usize,
    pub intervals: Vec<IntervalStats>,
}

/// Run `runs_per_interval` randomized impulsive disturbances in each flight
/// interval and collect landing-error statistics.
#[allow(clippy::too_many_arguments)]
pub fn batch_robustness(
    plan: &JumpPlan,
    controller: &Controller,
    runs_per_interval: usize,
    sampler: &DisturbanceSampler,
    noise: &NoiseSpec,
    scenario: &Scenario,
    cfg: &SimConfig,
    seed: u64,
) -> Result<RobustnessSummary> {
    if sampler.intervals == 0 || !(sampler.amplitude_min >= 0.0 && sampler.amplitude_max >= sampler.amplitude_min) {
        return Err(Error::invalid("sampler", "need intervals >= 1 and 0 <= amplitude_min <= amplitude_max"));
    }
    let jobs: Vec<(usize, usize)> = (0..sampler.intervals).flat_map(|i| (0..runs_per_interval).map(move |r| (i, r))).collect();
    let results: Vec<(usize, Option<f64>)> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let run_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((i * 1_000_003 + r) as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let dist = sampler.sample(i, plan.t_f, &mut rng);
            let run_noise = NoiseSpec { seed: run_seed, ..noise.clone() };
            let err = run_episode(plan, controller, &dist, &run_noise, scenario, cfg)
                .ok()
                .filter(|t| t.failure.is_none())
                .map(|t| t.landing_error.norm());
            (i, err)
        })
        .collect();
    let intervals = (0..if runs_per_interval == 0 { 0 } else { sampler.intervals })
        .map(|i| {
            let errs: Vec<f64> = results.iter().filter(|(j, _)| *j == i).filter_map(|(_, e)| *e).collect();
            let n = errs.len() as f64;
            let mean = if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / n };
            let var = if errs.is_empty() { f64::NAN } else { errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n };
            IntervalStats { interval: i, runs: runs_per_interval, failures: runs_per_interval - errs.len(), mean_error: mean, std_error: var.sqrt() }
        })
        .collect();
    Ok(RobustnessSummary { seed, runs_per_interval, intervals })
}
