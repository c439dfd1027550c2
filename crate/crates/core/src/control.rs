//! Small control laws used around the flight: leg reorientation, hip
//! alignment, landing impedance and lateral manoeuvring on the wall.

use nalgebra::{Matrix3, SMatrix, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::scenario::Vec3;
use crate::{Error, Result};

/// Largest yaw error the landing mechanism can absorb (rad).
pub const REORIENTATION_RANGE: f64 = 0.6;

/// Wheel radius (m).
pub const WHEEL_RADIUS: f64 = 0.075;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyPose {
    pub position: Vec3,
    rotation: Matrix3<f64>,
}

impl RigidBodyPose {
    pub fn new(position: Vec3, rotation: Matrix3<f64>) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if orth > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("rotation", "must be orthonormal with det +1"));
        }
        Ok(RigidBodyPose { position, rotation })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn x_axis(&self) -> Vec3 {
        self.rotation.column(0).into()
    }

    pub fn y_axis(&self) -> Vec3 {
        self.rotation.column(1).into()
    }
}

/// Yaw of a Z-Y-X Euler decomposition.
pub fn yaw_from_rotation(r: &Matrix3<f64>) -> f64 {
    r[(1, 0)].atan2(r[(0, 0)])
}

/// Shift both landing-joint set-points by the yaw error.
pub fn reorientation_setpoints(q0: (f64, f64), yaw_desired: f64, yaw: f64) -> (f64, f64) {
    let e = yaw_desired - yaw;
    if e.abs() > REORIENTATION_RANGE {
        log::warn!("yaw error {e:.3} rad exceeds the landing mechanism range");
    }
    (q0.0 + e, q0.1 + e)
}

/// Hip roll and pitch set-points aligning the thrust leg with `f_leg`.
pub fn hip_alignment(f_leg: &Vec3) -> Result<(f64, f64)> {
    if f_leg.norm() == 0.0 || !f_leg.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("f_leg", "must be finite and nonzero"));
    }
    let roll = f_leg.y.atan2(f_leg.x);
    let pitch = -std::f64::consts::PI + f_leg.z.atan2(f_leg.x);
    Ok((roll, pitch))
}

pub fn landing_torque(q: f64, q_dot: f64, q_des: f64, k: f64, d: f64) -> f64 {
    k * (q_des - q) - d * q_dot
}

pub fn critically_damped_gain(k: f64, m_reflected: f64) -> f64 {
    2.0 * (k * m_reflected).sqrt()
}

/// Joint torques that realize the contact force `f_c` on top of the bias `h`.
pub fn force_to_leg_torques(j: &Matrix3<f64>, h: &Vec3, f_c: &Vec3) -> Vec3 {
    h - j.transpose() * f_c
}

pub type LateralJacobian = SMatrix<f64, 4, 6>;

/// Rows map the base twist `(p_dot, omega)` to the lateral speeds of the two
/// wheels along the base Y axis and the rates of the two rope lengths.
/// Offsets are expressed in the world frame relative to the CoM.
pub fn lateral_jacobian(pose: &RigidBodyPose, wheels: [Vec3; 2], attachments: [Vec3; 2], rope_axes: [Vec3; 2]) -> LateralJacobian {
    let y = pose.y_axis();
    let mut j = LateralJacobian::zeros();
    let mut row = |i: usize, dir: &Vec3, offset: &Vec3| {
        let ang = (dir.transpose() * (-offset).cross_matrix()).transpose();
        for c in 0..3 {
            j[(i, c)] = dir[c];
            j[(i, 3 + c)] = ang[c];
        }
    };
    row(0, &y, &wheels[0]);
    row(1, &y, &wheels[1]);
    row(2, &rope_axes[0], &attachments[0]);
    row(3, &rope_axes[1], &attachments[1]);
    j
}

/// Wheel angular speeds (rad/s) and rope speeds (m/s) for a desired twist.
pub fn lateral_setpoints(p_dot: &Vec3, omega: &Vec3, j: &LateralJacobian, wheel_radius: f64) -> Result<Vector4<f64>> {
    if !(wheel_radius > 0.0) {
        return Err(Error::invalid("wheel_radius", "must be > 0 m"));
    }
    let twist = Vector6::new(p_dot.x, p_dot.y, p_dot.z, omega.x, omega.y, omega.z);
    let mut v = j * twist;
    v[0] /= wheel_radius;
    v[1] /= wheel_radius;
    Ok(v)
}
