//! Fixed-step explicit integration of the reduced dynamics with inputs held
//! constant over each knot interval.

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::model::{dynamics_with_disturbance, forward_kinematics, ControlInput, ReducedState};
use crate::scenario::{Scenario, Vec3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Equal sub-steps per knot interval.
    pub n_sub: usize,
    /// Knot interval in seconds.
    pub dt: f64,
}

impl IntegratorConfig {
    pub fn new(method: Method, n_sub: usize, dt: f64) -> Result<Self> {
        let cfg = IntegratorConfig { method, n_sub, dt };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("integrator", format!("dt must be > 0 s, got {}", self.dt)));
        }
        if self.n_sub == 0 {
            return Err(Error::invalid("integrator", "n_sub must be >= 1"));
        }
        Ok(())
    }

    pub fn with_dt(self, dt: f64) -> Self {
        IntegratorConfig { dt, ..self }
    }
}

fn to_vec(q: &ReducedState) -> Vector6<f64> {
    Vector6::from(q.to_array())
}

fn from_vec(x: &Vector6<f64>) -> ReducedState {
    ReducedState::from_array([x[0], x[1], x[2], x[3], x[4], x[5]])
}

fn deriv(x: &Vector6<f64>, u: &ControlInput, w: &Vec3, s: &Scenario) -> Result<Vector6<f64>> {
    let q = from_vec(x);
    let qdd = dynamics_with_disturbance(&q, u, w, s)?;
    Ok(Vector6::new(x[3], x[4], x[5], qdd[0], qdd[1], qdd[2]))
}

fn substep(method: Method, x: &Vector6<f64>, h: f64, u: &ControlInput, w: &Vec3, s: &Scenario) -> Result<Vector6<f64>> {
    let next = match method {
        Method::Euler => x + deriv(x, u, w, s)? * h,
        Method::Rk4 => {
            let k1 = deriv(x, u, w, s)?;
            let k2 = deriv(&(x + k1 * (h / 2.0)), u, w, s)?;
            let k3 = deriv(&(x + k2 * (h / 2.0)), u, w, s)?;
            let k4 = deriv(&(x + k3 * h), u, w, s)?;
            x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        }
    };
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(next)
}

/// Advance one knot interval.
pub fn step(q: &ReducedState, u: &ControlInput, cfg: &IntegratorConfig, scenario: &Scenario) -> Result<ReducedState> {
    step_with_disturbance(q, u, &Vec3::zeros(), cfg, scenario)
}

pub fn step_with_disturbance(
    q: &ReducedState,
    u: &ControlInput,
    disturbance: &Vec3,
    cfg: &IntegratorConfig,
    scenario: &Scenario,
) -> Result<ReducedState> {
    cfg.check()?;
    let h = cfg.dt / cfg.n_sub as f64;
    let mut x = to_vec(q);
    for _ in 0..cfg.n_sub {
        x = substep(cfg.method, &x, h, u, disturbance, scenario)?;
    }
    Ok(from_vec(&x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub states: Vec<ReducedState>,
    pub positions: Vec<Vec3>,
}

impl Rollout {
    pub fn final_position(&self) -> Vec3 {
        *self.positions.last().expect("rollout always holds the initial state")
    }
}

/// Propagate through one knot per schedule entry; returns `len + 1` samples.
pub fn rollout(q0: &ReducedState, schedule: &[ControlInput], cfg: &IntegratorConfig, scenario: &Scenario) -> Result<Rollout> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule", "input schedule is empty"));
    }
    cfg.check()?;
    let mut states = Vec::with_capacity(schedule.len() + 1);
    let mut positions = Vec::with_capacity(schedule.len() + 1);
    states.push(*q0);
    positions.push(forward_kinematics(q0, scenario).map_err(|e| e.at_knot(0))?);
    let mut q = *q0;
    for (k, u) in schedule.iter().enumerate() {
        q = step(&q, u, cfg, scenario).map_err(|e| e.at_knot(k))?;
        positions.push(forward_kinematics(&q, scenario).map_err(|e| e.at_knot(k + 1))?);
        states.push(q);
    }
    Ok(Rollout { states, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{cartesian_velocity, state_from_cartesian};

    fn scen() -> Scenario {
        Scenario::default()
    }

    fn ballistic_error(method: Method, dt: f64, steps: usize) -> f64 {
        let s = scen();
        let p0 = Vec3::new(0.5, 2.0, -6.0);
        let v0 = Vec3::new(0.5, 1.0, 3.0);
        let mut q = state_from_cartesian(&p0, &v0, &s).unwrap();
        let cfg = IntegratorConfig::new(method, 1, dt).unwrap();
        for _ in 0..steps {
            q = step(&q, &ControlInput::default(), &cfg, &s).unwrap();
        }
        let t = dt * steps as f64;
        let exact = p0 + v0 * t + s.gravity * (0.5 * t * t);
        (forward_kinematics(&q, &s).unwrap() - exact).norm()
    }

    #[test]
    fn rk4_free_fall_is_ballistic() {
        assert!(ballistic_error(Method::Rk4, 1e-3, 1000) < 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(IntegratorConfig::new(Method::Rk4, 0, 0.1).is_err());
        assert!(IntegratorConfig::new(Method::Rk4, 1, 0.0).is_err());
    }

    fn forced_schedule(n: usize) -> Vec<ControlInput> {
        (0..n)
            .map(|k| {
                let t = k as f64 / n as f64;
                ControlInput::ropes(-30.0 - 20.0 * t, -40.0 + 15.0 * t)
            })
            .collect()
    }

    fn start() -> ReducedState {
        state_from_cartesian(&Vec3::new(0.3, 2.5, -6.0), &Vec3::new(1.0, 1.0, 2.0), &scen()).unwrap()
    }

    #[test]
    fn euler_error_exceeds_rk4() {
        let s = scen();
        let sched = forced_schedule(40);
        let dt = 1.5 / 40.0;
        let fine = rollout(&start(), &sched, &IntegratorConfig::new(Method::Rk4, 200, dt).unwrap(), &s).unwrap();
        let e = |m| {
            let r = rollout(&start(), &sched, &IntegratorConfig::new(m, 1, dt).unwrap(), &s).unwrap();
            (r.final_position() - fine.final_position()).norm()
        };
        assert!(e(Method::Euler) >= 5.0 * e(Method::Rk4));
    }

    #[test]
    fn substepping_equals_finer_knots() {
        let s = scen();
        let sched = forced_schedule(10);
        let coarse = rollout(&start(), &sched, &IntegratorConfig::new(Method::Rk4, 4, 0.1).unwrap(), &s).unwrap();
        let fine_sched: Vec<_> = sched.iter().flat_map(|u| std::iter::repeat_n(*u, 4)).collect();
        let fine = rollout(&start(), &fine_sched, &IntegratorConfig::new(Method::Rk4, 1, 0.025).unwrap(), &s).unwrap();
        for (k, q) in coarse.states.iter().enumerate() {
            assert_eq!(*q, fine.states[4 * k]);
        }
    }

    #[test]
    fn observed_orders() {
        // Error against a very fine reference, halving dt.
        let s = scen();
        let t_f = 1.2;
        let reference = |n: usize, m: Method| {
            let sched = forced_schedule(8);
            let sub = n / 8;
            let r = rollout(&start(), &sched, &IntegratorConfig::new(m, sub, t_f / 8.0).unwrap(), &s).unwrap();
            r.final_position()
        };
        let exact = reference(8 * 2000, Method::Rk4);
        let order = |m: Method, n: usize| {
            let e1 = (reference(n, m) - exact).norm();
            let e2 = (reference(2 * n, m) - exact).norm();
            (e1 / e2).log2()
        };
        let rk4 = order(Method::Rk4, 32);
        let euler = order(Method::Euler, 256);
        assert!((rk4 - 4.0).abs() < 0.4, "rk4 order {rk4}");
        assert!((euler - 1.0).abs() < 0.2, "euler order {euler}");
    }

    #[test]
    fn rollout_is_prefix_stable() {
        let s = scen();
        let cfg = IntegratorConfig::new(Method::Rk4, 3, 0.05).unwrap();
        let sched = forced_schedule(20);
        let long = rollout(&start(), &sched, &cfg, &s).unwrap();
        let short = rollout(&start(), &sched[..7], &cfg, &s).unwrap();
        assert_eq!(short.states[..], long.states[..8]);
        assert_eq!(short.positions.len(), 8);
    }

    #[test]
    fn empty_forces_reproduce_free_fall() {
        let s = scen();
        let cfg = IntegratorConfig::new(Method::Rk4, 10, 0.05).unwrap();
        let q0 = start();
        let v0 = cartesian_velocity(&q0, &s).unwrap();
        let p0 = forward_kinematics(&q0, &s).unwrap();
        let r = rollout(&q0, &vec![ControlInput::default(); 10], &cfg, &s).unwrap();
        for (k, p) in r.positions.iter().enumerate() {
            let t = 0.05 * k as f64;
            assert!((p - (p0 + v0 * t + s.gravity * (0.5 * t * t))).norm() < 1e-8);
        }
    }

    #[test]
    fn failure_reports_knot() {
        let s = Scenario { singularity_eps: 0.5, ..scen() };
        let q0 = ReducedState { psi: 1.0, l1: 6.0, l2: 6.0, psi_dot: -3.0, ..Default::default() };
        let cfg = IntegratorConfig::new(Method::Euler, 1, 0.05).unwrap();
        let err = rollout(&q0, &vec![ControlInput::default(); 10], &cfg, &s).unwrap_err();
        match err {
            Error::Rollout { knot, source } => {
                assert!(knot > 0);
                assert!(matches!(*source, Error::Singularity(_)));
            }
            other => panic!("unexpected {other}"),
        }
    }
}
