//! Reduced point-mass model: kinematics of the two-rope suspension and the
//! Newton equation written in rope coordinates.
//!
//! Rope forces are signed magnitudes along `a_hat = (p - anchor) / l`, so a
//! pulling rope has a negative force.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, Vec3};
use crate::{Error, Result};

/// Tolerance used when checking rope unilaterality.
pub const ROPE_SIGN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub psi: f64,
    pub l1: f64,
    pub l2: f64,
    pub psi_dot: f64,
    pub l1_dot: f64,
    pub l2_dot: f64,
}

impl ReducedState {
    pub fn at_rest(psi: f64, l1: f64, l2: f64) -> Self {
        ReducedState { psi, l1, l2, ..Default::default() }
    }

    pub fn from_parts(q: &Vector3<f64>, qd: &Vector3<f64>) -> Self {
        ReducedState {
            psi: q[0],
            l1: q[1],
            l2: q[2],
            psi_dot: qd[0],
            l1_dot: qd[1],
            l2_dot: qd[2],
        }
    }

    pub fn q(&self) -> Vector3<f64> {
        Vector3::new(self.psi, self.l1, self.l2)
    }

    pub fn qd(&self) -> Vector3<f64> {
        Vector3::new(self.psi_dot, self.l1_dot, self.l2_dot)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.psi, self.l1, self.l2, self.psi_dot, self.l1_dot, self.l2_dot]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        ReducedState { psi: a[0], l1: a[1], l2: a[2], psi_dot: a[3], l1_dot: a[4], l2_dot: a[5] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub f_r_left: f64,
    pub f_r_right: f64,
    pub f_leg: Vec3,
    pub f_p: f64,
}

impl ControlInput {
    pub fn new(f_r_left: f64, f_r_right: f64, f_leg: Vec3, f_p: f64) -> Result<Self> {
        let u = ControlInput { f_r_left, f_r_right, f_leg, f_p };
        u.check()?;
        Ok(u)
    }

    pub fn ropes(f_r_left: f64, f_r_right: f64) -> Self {
        ControlInput { f_r_left, f_r_right, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        for f in [self.f_r_left, self.f_r_right] {
            if f > ROPE_SIGN_TOL {
                return Err(Error::PushingRope(f));
            }
        }
        Ok(())
    }
}

fn check_lengths(l1: f64, l2: f64, d_a: f64) -> Result<()> {
    let ok = l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite();
    if !ok {
        return Err(Error::Domain { l1, l2, d_a });
    }
    Ok(())
}

/// In-plane coordinates of the mass: `y` along the anchor line and `r` the
/// distance from it.
fn plane_coords(l1: f64, l2: f64, d_a: f64) -> Result<(f64, f64)> {
    check_lengths(l1, l2, d_a)?;
    let y = (d_a * d_a + l1 * l1 - l2 * l2) / (2.0 * d_a);
    let r2 = l1 * l1 - y * y;
    let tol = 1e-12 * l1 * l1;
    if r2 < -tol {
        return Err(Error::Domain { l1, l2, d_a });
    }
    Ok((y, r2.max(0.0).sqrt()))
}

pub fn forward_kinematics(q: &ReducedState, scenario: &Scenario) -> Result<Vec3> {
    let (y, r) = plane_coords(q.l1, q.l2, scenario.anchor_distance())?;
    let (s, c) = q.psi.sin_cos();
    Ok(Vec3::new(r * s, y, -r * c))
}

/// Rope-plane angle and rope lengths of a Cartesian position.
pub fn inverse_kinematics(p: &Vec3, scenario: &Scenario) -> Result<(f64, f64, f64)> {
    let l1 = (p - scenario.anchor_left).norm();
    let l2 = (p - scenario.anchor_right).norm();
    let r = p.x.hypot(p.z);
    if r <= 1e-12 * l1.max(1.0) {
        return Err(Error::OnAnchorLine);
    }
    Ok((p.x.atan2(-p.z), l1, l2))
}

/// Full state (with rates) whose position is `p` and Cartesian velocity `v`.
pub fn state_from_cartesian(p: &Vec3, v: &Vec3, scenario: &Scenario) -> Result<ReducedState> {
    let (psi, l1, l2) = inverse_kinematics(p, scenario)?;
    let at = ReducedState::at_rest(psi, l1, l2);
    let chart = Chart::new(&at, scenario)?;
    let qd = chart
        .jacobian
        .lu()
        .solve(v)
        .ok_or(Error::Singularity(psi.sin().abs()))?;
    Ok(ReducedState::from_parts(&at.q(), &qd))
}

/// Unit vector normal to the ropes plane.
pub fn propeller_axis(q: &ReducedState) -> Vec3 {
    let (s, c) = q.psi.sin_cos();
    Vec3::new(c, 0.0, s)
}

/// Position, Jacobian and second derivatives of the forward kinematics.
#[derive(Clone, Debug)]
pub struct Chart {
    pub position: Vec3,
    /// `dp/dq`, columns ordered (psi, l1, l2).
    pub jacobian: Matrix3<f64>,
    /// `hessians[c]` is the Hessian of position component `c`.
    pub hessians: [Matrix3<f64>; 3],
}

impl Chart {
    pub fn new(q: &ReducedState, scenario: &Scenario) -> Result<Self> {
        let d = scenario.anchor_distance();
        let (l1, l2) = (q.l1, q.l2);
        let (y, r) = plane_coords(l1, l2, d)?;
        if r <= 1e-12 * l1 {
            return Err(Error::OnAnchorLine);
        }
        let (s, c) = q.psi.sin_cos();

        let y1 = l1 / d;
        let y2 = -l2 / d;
        let (y11, y12, y22) = (1.0 / d, 0.0, -1.0 / d);
        let r1 = (l1 - y * y1) / r;
        let r2 = -y * y2 / r;
        let r11 = (1.0 - y1 * y1 - y * y11 - r1 * r1) / r;
        let r12 = (-y1 * y2 - y * y12 - r1 * r2) / r;
        let r22 = (-y2 * y2 - y * y22 - r2 * r2) / r;

        let position = Vec3::new(r * s, y, -r * c);
        #[rustfmt::skip]
        let jacobian = Matrix3::new(
            r * c, r1 * s,  r2 * s,
            0.0,   y1,      y2,
            r * s, -r1 * c, -r2 * c,
        );
        #[rustfmt::skip]
        let hx = Matrix3::new(
            -r * s, r1 * c,  r2 * c,
            r1 * c, r11 * s, r12 * s,
            r2 * c, r12 * s, r22 * s,
        );
        #[rustfmt::skip]
        let hy = Matrix3::new(
            0.0, 0.0, 0.0,
            0.0, y11, y12,
            0.0, y12, y22,
        );
        #[rustfmt::skip]
        let hz = Matrix3::new(
            r * c,  r1 * s,   r2 * s,
            r1 * s, -r11 * c, -r12 * c,
            r2 * s, -r12 * c, -r22 * c,
        );
        Ok(Chart { position, jacobian, hessians: [hx, hy, hz] })
    }

    /// Velocity-product term so that `p_ddot = A q_ddot + b`.
    pub fn bias(&self, qd: &Vector3<f64>) -> Vec3 {
        Vec3::from_fn(|c, _| qd.dot(&(self.hessians[c] * qd)))
    }
}

fn check_singularity(q: &ReducedState, scenario: &Scenario) -> Result<()> {
    let s = q.psi.sin().abs();
    if s < scenario.singularity_eps || !s.is_finite() {
        return Err(Error::Singularity(s));
    }
    Ok(())
}

/// `(A_d, b_d)` with `p_ddot = A_d q_ddot + b_d`.
pub fn mass_matrix_terms(q: &ReducedState, scenario: &Scenario) -> Result<(Matrix3<f64>, Vec3)> {
    check_singularity(q, scenario)?;
    let chart = Chart::new(q, scenario)?;
    let b = chart.bias(&q.qd());
    Ok((chart.jacobian, b))
}

pub fn cartesian_velocity(q: &ReducedState, scenario: &Scenario) -> Result<Vec3> {
    Ok(Chart::new(q, scenario)?.jacobian * q.qd())
}

/// Rope axes pointing from each anchor to the mass.
pub fn rope_axes(p: &Vec3, scenario: &Scenario) -> (Vec3, Vec3) {
    (
        (p - scenario.anchor_left).normalize(),
        (p - scenario.anchor_right).normalize(),
    )
}

/// Resultant force on the mass.
pub fn total_force(p: &Vec3, q: &ReducedState, u: &ControlInput, disturbance: &Vec3, scenario: &Scenario) -> Vec3 {
    let (al, ar) = rope_axes(p, scenario);
    scenario.weight() + u.f_leg + al * u.f_r_left + ar * u.f_r_right + propeller_axis(q) * u.f_p + disturbance
}

pub fn dynamics(q: &ReducedState, u: &ControlInput, scenario: &Scenario) -> Result<Vector3<f64>> {
    dynamics_with_disturbance(q, u, &Vec3::zeros(), scenario)
}

pub fn dynamics_with_disturbance(
    q: &ReducedState,
    u: &ControlInput,
    disturbance: &Vec3,
    scenario: &Scenario,
) -> Result<Vector3<f64>> {
    u.check()?;
    check_singularity(q, scenario)?;
    let chart = Chart::new(q, scenario)?;
    let b = chart.bias(&q.qd());
    let f = total_force(&chart.position, q, u, disturbance, scenario);
    chart
        .jacobian
        .lu()
        .solve(&(f / scenario.mass - b))
        .ok_or(Error::Singularity(q.psi.sin().abs()))
}
