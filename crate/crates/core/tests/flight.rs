use std::sync::OnceLock;

use ropeclimb_core::energy::jump_energy;
use ropeclimb_core::model::{forward_kinematics, inverse_kinematics, total_force};
use ropeclimb_core::mpc::{mpc_step, MpcConfig, MpcController};
use ropeclimb_core::planner::{plan_jump, JumpPlan, PlannerConfig, PlannerWeights};
use ropeclimb_core::sim::*;
use ropeclimb_core::{Scenario, Vec3};

fn plan() -> &'static JumpPlan {
    static PLAN: OnceLock<JumpPlan> = OnceLock::new();
    PLAN.get_or_init(|| {
        let s = Scenario::default();
        plan_jump(&Vec3::new(0.2, 2.5, -6.0), &Vec3::new(0.2, 4.0, -4.0), &s, &PlannerWeights::default(), &PlannerConfig::default())
            .unwrap()
    })
}

fn mpc() -> Controller {
    Controller::Mpc(MpcConfig::default())
}

fn run(controller: &Controller, d: DisturbanceSpec, noise: NoiseSpec) -> SimTrace {
    let t = run_episode(plan(), controller, &d, &noise, &Scenario::default(), &SimConfig::default()).unwrap();
    assert!(t.failure.is_none(), "{:?}", t.failure);
    t
}

#[test]
fn plan_meets_terminal_slack() {
    assert!(plan().terminal_error() <= 0.05);
}

#[test]
fn open_loop_reproduces_plan() {
    let t = run(&Controller::OpenLoop, DisturbanceSpec::None, NoiseSpec::default());
    assert!(t.landing_error.norm() < 0.06);
    assert!(t.lift_off_time().is_some());
}

#[test]
fn noise_never_touches_the_true_state_in_open_loop() {
    let clean = run(&Controller::OpenLoop, DisturbanceSpec::None, NoiseSpec::default());
    let noisy = run(&Controller::OpenLoop, DisturbanceSpec::None, NoiseSpec { sigma: [0.01, 0.2, 0.2], seed: 7 });
    assert_eq!(clean, noisy);
}

#[test]
fn work_energy_balance_in_open_loop() {
    let s = Scenario::default();
    let t = run(&Controller::OpenLoop, DisturbanceSpec::None, NoiseSpec::default());
    let lo = t.lift_off_time().unwrap();
    let rows: Vec<_> = t.rows.iter().filter(|r| r.t >= lo - 1e-9).collect();
    let mut imbalance = 0.0;
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dke = 0.5 * s.mass * (b.velocity.norm_squared() - a.velocity.norm_squared());
        let fa = total_force(&a.position, &a.state, &a.input, &a.disturbance, &s);
        let fb = total_force(&b.position, &b.state, &a.input, &a.disturbance, &s);
        let work = 0.5 * (fa.dot(&a.velocity) + fb.dot(&b.velocity)) * (b.t - a.t);
        imbalance += dke - work;
    }
    assert!(imbalance.abs() <= 1e-3, "imbalance {imbalance}");
}

#[test]
fn hoist_quadrature_converges() {
    let s = Scenario::default();
    let coarse = run_episode(plan(), &Controller::OpenLoop, &DisturbanceSpec::None, &NoiseSpec::default(), &s, &SimConfig { dt_sim: 1e-3 }).unwrap();
    let fine = run_episode(plan(), &Controller::OpenLoop, &DisturbanceSpec::None, &NoiseSpec::default(), &s, &SimConfig { dt_sim: 5e-4 }).unwrap();
    let (a, b) = (jump_energy(&coarse, &s).unwrap(), jump_energy(&fine, &s).unwrap());
    assert!((a.hoist - b.hoist).abs() < 0.005 * b.hoist, "{} vs {}", a.hoist, b.hoist);
    assert!(a.kinetic > 0.0 && a.hoist > 0.0);
}

#[test]
fn mpc_on_reference_stays_on_feed_forward() {
    let s = Scenario::default();
    let ctrl = MpcController::new(plan(), MpcConfig::default()).unwrap();
    for k in [0, 10, 25] {
        let sol = mpc_step(&plan().states[k], k, plan(), &ctrl, &s).unwrap();
        let worst = sol.delta_left.iter().chain(&sol.delta_right).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-6, "knot {k}: {worst}");
        assert!(sol.f_p.iter().all(|f| f.abs() <= 1e-6));
    }
}

#[test]
fn mpc_rejects_constant_disturbance_within_bounds() {
    let s = Scenario::default();
    let t = run(&mpc(), DisturbanceSpec::Constant { force: Vec3::new(7.0, -7.0, 0.0) }, NoiseSpec::default());
    assert!(t.landing_error.norm() <= 0.15, "{}", t.landing_error.norm());
    for r in &t.rows {
        assert!(r.input.f_r_left <= 1e-8 && r.input.f_r_left >= -s.f_r_max - 1e-8);
        assert!(r.input.f_r_right <= 1e-8 && r.input.f_r_right >= -s.f_r_max - 1e-8);
        assert!(r.input.f_p.abs() <= s.f_p_max + 1e-8);
    }
}

#[test]
fn vertical_disturbances_are_comparable() {
    let up = run(&mpc(), DisturbanceSpec::Constant { force: Vec3::new(0.0, 0.0, 7.0) }, NoiseSpec::default());
    let down = run(&mpc(), DisturbanceSpec::Constant { force: Vec3::new(0.0, 0.0, -7.0) }, NoiseSpec::default());
    let (u, d) = (up.landing_error.norm(), down.landing_error.norm());
    assert!(d <= 3.0 * u && u <= 3.0 * d, "up {u} down {d}");
}

#[test]
fn ablation_still_recovers_rope_lengths() {
    let s = Scenario { f_p_max: 0.0, ..Scenario::default() };
    let d = DisturbanceSpec::impulsive(Vec3::new(50.0, -50.0, 30.0), 0.0);
    let t = run_episode(plan(), &mpc(), &d, &NoiseSpec::default(), &s, &SimConfig::default()).unwrap();
    assert!(t.failure.is_none());
    assert!(t.rows.iter().all(|r| r.input.f_p == 0.0));
    let (_, l1, l2) = inverse_kinematics(&plan().p_tg, &s).unwrap();
    let end = t.rows.last().unwrap().state;
    assert!((end.l1 - l1).abs() <= 0.1 && (end.l2 - l2).abs() <= 0.1);
}

#[test]
fn zero_amplitude_batch_matches_undisturbed_run() {
    let s = Scenario::default();
    let sampler = DisturbanceSampler { amplitude_min: 0.0, amplitude_max: 0.0, intervals: 2, ..Default::default() };
    let clean = run(&Controller::OpenLoop, DisturbanceSpec::None, NoiseSpec::default()).landing_error.norm();
    let summary = batch_robustness(plan(), &Controller::OpenLoop, 2, &sampler, &NoiseSpec::default(), &s, &SimConfig::default(), 3).unwrap();
    for i in &summary.intervals {
        assert_eq!(i.failures, 0);
        assert!((i.mean_error - clean).abs() < 1e-12);
        assert!(i.std_error < 1e-12);
    }
}

#[test]
fn batches_are_deterministic() {
    let s = Scenario::default();
    let sampler = DisturbanceSampler { intervals: 2, ..Default::default() };
    let noise = NoiseSpec { sigma: [0.01, 0.2, 0.2], seed: 0 };
    let a = batch_robustness(plan(), &Controller::OpenLoop, 2, &sampler, &noise, &s, &SimConfig::default(), 11).unwrap();
    let b = batch_robustness(plan(), &Controller::OpenLoop, 2, &sampler, &noise, &s, &SimConfig::default(), 11).unwrap();
    assert_eq!(a, b);
    let empty = batch_robustness(plan(), &Controller::OpenLoop, 0, &sampler, &noise, &s, &SimConfig::default(), 11).unwrap();
    assert!(empty.intervals.is_empty());
}

#[test]
fn delayed_touch_down_is_flagged() {
    // Standoff further inside the wall than the target: contact only after the horizon.
    let s = Scenario::default();
    let params = LandingParams { standoff: Some(0.1), settle: 0.2, ..Default::default() };
    let t = landing_episode(plan(), &Controller::OpenLoop, &params, &s, &SimConfig::default()).unwrap();
    assert!(t.failure.is_none(), "{:?}", t.failure);
    if let Some((tc, early)) = t.touch_down() {
        assert_eq!(early, tc < plan().t_f + s.t_th);
    }
    assert!(t.rows.iter().any(|r| r.phase == Phase::Hold) || t.touch_down().map(|x| x.1).unwrap_or(false));
    let p = forward_kinematics(&t.rows.last().unwrap().state, &s).unwrap();
    assert!(p.iter().all(|v| v.is_finite()));
}

#[test]
fn robustness_error_grows_with_rope_length() {
    let s = Scenario::default();
    let p0 = Vec3::new(0.2, 2.5, -6.0);
    let sampler = DisturbanceSampler { intervals: 5, ..Default::default() };
    let noise = NoiseSpec { sigma: [0.01, 0.2, 0.2], seed: 0 };
    let means: Vec<f64> = [Vec3::new(0.5, 4.0, -4.0), Vec3::new(0.2, 4.0, -9.0), Vec3::new(0.2, 4.0, -12.0)]
        .iter()
        .map(|tg| {
            let p = plan_jump(&p0, tg, &s, &PlannerWeights::default(), &PlannerConfig::default()).unwrap();
            let r = batch_robustness(&p, &mpc(), 1, &sampler, &noise, &s, &SimConfig::default(), 1).unwrap();
            assert!(r.intervals.iter().all(|i| i.failures == 0));
            r.intervals.iter().map(|i| i.mean_error).sum::<f64>() / r.intervals.len() as f64
        })
        .collect();
    assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
}
