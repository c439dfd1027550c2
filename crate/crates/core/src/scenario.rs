//! Physical setup of a jump: anchors, wall, robot mass, actuation limits and
//! the optional obstacle on the wall face.
//!
//! The inertial frame sits at the left anchor with the anchor line along +Y.
//! The wall face is the plane `n . p = wall_offset`; the robot lives on the
//! `n . p >= wall_offset` side.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Axis-aligned ellipsoid obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipsoid {
    pub center: Vec3,
    /// Semi-axes (R_x, R_y, R_z), all strictly positive.
    pub semi_axes: Vec3,
}

impl Ellipsoid {
    pub fn new(center: Vec3, semi_axes: Vec3) -> Result<Self> {
        let e = Ellipsoid { center, semi_axes };
        e.check()?;
        Ok(e)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.semi_axes.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("ellipsoid", "semi-axes must be strictly positive"));
        }
        Ok(())
    }

    /// Left-hand side of the standard-form equation; 1 on the surface.
    pub fn level(&self, p: &Vec3) -> f64 {
        let d = p - self.center;
        (d.x / self.semi_axes.x).powi(2)
            + (d.y / self.semi_axes.y).powi(2)
            + (d.z / self.semi_axes.z).powi(2)
    }
}

/// A scenario field that failed validation.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldViolation {
    pub key: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub anchor_left: Vec3,
    pub anchor_right: Vec3,
    pub mass: f64,
    pub gravity: Vec3,
    /// Outward unit normal of the wall face.
    pub wall_normal: Vec3,
    pub wall_offset: f64,
    /// Unit normal of the surface touched by the leg and the landing wheels.
    pub contact_normal: Vec3,
    pub mu: f64,
    pub f_leg_max: f64,
    pub f_r_max: f64,
    pub f_p_max: f64,
    /// Thrust (leg push) duration.
    pub t_th: f64,
    /// Landing wheel spacing.
    pub d_b: f64,
    /// Landing wheel clearance from the CoM along the contact normal.
    pub d_w: f64,
    /// Spacing of the two hoist attachment points.
    pub d_h: f64,
    /// Offset of the landing wheels from the CoM along the wall's up axis.
    pub wheel_z_offset: f64,
    /// Threshold on |sin psi| below which the reduced model refuses to evaluate.
    pub singularity_eps: f64,
    pub obstacle: Option<Ellipsoid>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            anchor_left: Vec3::zeros(),
            anchor_right: Vec3::new(0.0, 5.0, 0.0),
            mass: 5.0,
            gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
            wall_normal: Vec3::x(),
            wall_offset: 0.0,
            contact_normal: Vec3::x(),
            mu: 0.8,
            f_leg_max: 300.0,
            f_r_max: 90.0,
            f_p_max: 25.0,
            t_th: 0.05,
            d_b: 0.8,
            d_w: 0.4,
            d_h: 0.3,
            wheel_z_offset: 0.0,
            singularity_eps: 1e-6,
            obstacle: None,
        }
    }
}

impl Scenario {
    /// Heavier configuration carrying the landing mechanism.
    pub fn landing() -> Self {
        Scenario {
            mass: 15.0,
            f_leg_max: 600.0,
            f_r_max: 300.0,
            ..Scenario::default()
        }
    }

    /// Wall tilted by `inclination` rad from the vertical (a slab leaning back).
    pub fn with_wall_inclination(mut self, inclination: f64) -> Self {
        let n = Vec3::new(inclination.cos(), 0.0, inclination.sin());
        self.wall_normal = n;
        self.contact_normal = n;
        self
    }

    pub fn anchor_distance(&self) -> f64 {
        (self.anchor_right - self.anchor_left).norm()
    }

    pub fn weight(&self) -> Vec3 {
        self.gravity * self.mass
    }

    /// Signed distance of `p` from the wall face (positive on the robot side).
    pub fn wall_distance(&self, p: &Vec3) -> f64 {
        self.wall_normal.dot(p) - self.wall_offset
    }

    pub fn violations(&self) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        let mut bad = |key: &'static str, message: String| out.push(FieldViolation { key, message });
        let finite3 = |v: &Vec3| v.iter().all(|x| x.is_finite());

        for (key, v) in [
            ("anchor_left", &self.anchor_left),
            ("anchor_right", &self.anchor_right),
            ("gravity", &self.gravity),
            ("wall_normal", &self.wall_normal),
            ("contact_normal", &self.contact_normal),
        ] {
            if !finite3(v) {
                bad(key, "components must be finite".into());
            }
        }
        if self.anchor_left.norm() > 1e-12 {
            bad("anchor_left", "must be the frame origin [0, 0, 0] m".into());
        }
        let d_a = self.anchor_distance();
        if !(d_a > 0.0) {
            bad("anchor_right", "anchors must be distinct".into());
        } else if (self.anchor_right - Vec3::new(0.0, d_a, 0.0)).norm() > 1e-9 * d_a.max(1.0) {
            bad("anchor_right", "must lie on the +Y axis, [0, d_a, 0] m".into());
        }
        for (key, n) in [("wall_normal", &self.wall_normal), ("contact_normal", &self.contact_normal)] {
            if (n.norm() - 1.0).abs() > 1e-9 {
                bad(key, format!("must be unit norm (got {:.6})", n.norm()));
            }
        }
        let positive = [
            ("mass", self.mass, "kg"),
            ("mu", self.mu, ""),
            ("f_leg_max", self.f_leg_max, "N"),
            ("f_r_max", self.f_r_max, "N"),
            ("t_th", self.t_th, "s"),
            ("singularity_eps", self.singularity_eps, ""),
        ];
        for (key, value, unit) in positive {
            if !(value > 0.0) || !value.is_finite() {
                bad(key, format!("must be > 0 {unit}").trim_end().to_string());
            }
        }
        let non_negative = [
            ("f_p_max", self.f_p_max),
            ("d_b", self.d_b),
            ("d_w", self.d_w),
            ("d_h", self.d_h),
        ];
        for (key, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                bad(key, "must be >= 0 m (or N)".into());
            }
        }
        if !self.wall_offset.is_finite() {
            bad("wall_offset", "must be finite m".into());
        }
        if !self.wheel_z_offset.is_finite() {
            bad("wheel_z_offset", "must be finite m".into());
        }
        if let Some(obstacle) = &self.obstacle {
            if obstacle.check().is_err() {
                bad("obstacle", "semi_axes must be > 0 m".into());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            return Ok(());
        }
        let reason = v
            .iter()
            .map(|f| format!("{}: {}", f.key, f.message))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::invalid("scenario", reason))
    }
}

/// Rotation whose columns are (t1, t2, n): local +Z maps to `n`, and `t2` is
/// world Y made orthogonal to `n` (world X when `n` is parallel to Y).
pub fn contact_frame(n: &Vec3) -> Matrix3<f64> {
    let n = n.normalize();
    let mut seed = Vec3::y();
    if n.cross(&seed).norm() < 1e-6 {
        seed = Vec3::x();
    }
    let t2 = (seed - n * n.dot(&seed)).normalize();
    let t1 = t2.cross(&n);
    Matrix3::from_columns(&[t1, t2, n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_preset_is_valid() {
        assert!(Scenario::default().validate().is_ok());
        assert!(Scenario::landing().validate().is_ok());
        assert!(Scenario::default().with_wall_inclination(0.3).validate().is_ok());
    }

    #[test]
    fn negative_friction_is_reported() {
        let s = Scenario { mu: -1.0, ..Scenario::default() };
        let v = s.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "mu");
    }

    #[test]
    fn misplaced_anchor_is_reported() {
        let s = Scenario { anchor_right: Vec3::new(1.0, 5.0, 0.0), ..Scenario::default() };
        assert!(s.violations().iter().any(|f| f.key == "anchor_right"));
    }

    #[test]
    fn contact_frame_is_rotation() {
        for n in [Vec3::x(), Vec3::y(), Vec3::new(0.3, -0.2, 0.9).normalize()] {
            let r = contact_frame(&n);
            assert_relative_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
            assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.column(2).into_owned(), n, epsilon = 1e-12);
        }
    }
}
