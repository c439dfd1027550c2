//! Feasible Wrench Polytope of the robot resting on the wall with two
//! landing wheels and hanging from two ropes.
//!
//! All wrenches are applied to the robot and expressed about its CoM as
//! `(force, moment)`. Static equilibrium needs the contacts to supply
//! `-w_G`, so margins are measured from that point.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use ropeclimb_core::optim::{solve_lp, LpProblem, LpStatus};
use ropeclimb_core::scenario::contact_frame;
use ropeclimb_core::{Scenario, Vec3};
use serde::{Deserialize, Serialize};

use crate::polytope::{convex_hull, directional_margin, minkowski_sum, v_to_h, HPolytope, Margin, MarginStatus, VPolytope};
use crate::{Result, WrenchError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl Wrench {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(6, self.force.iter().chain(self.moment.iter()).copied())
    }

    pub fn from_vector(w: &DVector<f64>) -> Self {
        Wrench { force: Vec3::new(w[0], w[1], w[2]), moment: Vec3::new(w[3], w[4], w[5]) }
    }
}

impl std::ops::Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench { force: -self.force, moment: -self.moment }
    }
}

/// Contact points relative to the CoM plus the force limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    /// Left, right landing wheel.
    pub wheels: [Vec3; 2],
    /// Left, right rope attachment.
    pub attachments: [Vec3; 2],
    /// Unit vectors from each anchor toward its attachment.
    pub rope_axes: [Vec3; 2],
    pub contact_normal: Vec3,
    pub mu: f64,
    pub f_leg_max: f64,
    pub f_r_max: f64,
}

impl ContactSet {
    fn check(&self) -> Result<()> {
        let unit = |v: &Vec3| (v.norm() - 1.0).abs() <= 1e-9;
        if !(self.rope_axes.iter().all(unit) && unit(&self.contact_normal)) {
            return Err(WrenchError::Invalid { what: "contact set", reason: "axes must be unit vectors".into() });
        }
        if !(self.mu >= 0.0 && self.f_leg_max > 0.0 && self.f_r_max > 0.0) {
            return Err(WrenchError::Invalid { what: "contact set", reason: "need mu >= 0 and positive force limits".into() });
        }
        Ok(())
    }

    /// The four corner forces of wheel pyramid at full load.
    fn pyramid_corners(&self) -> [Vec3; 4] {
        let r = contact_frame(&self.contact_normal);
        let m = self.mu;
        [(m, m), (-m, m), (-m, -m), (m, -m)].map(|(a, b)| r * Vec3::new(a, b, 1.0) * self.f_leg_max)
    }

    /// Rope pull at full tension (toward the anchor).
    fn rope_pull(&self, i: usize) -> Vec3 {
        -self.rope_axes[i] * self.f_r_max
    }
}

fn vecs(points: &[Vec3]) -> Vec<DVector<f64>> {
    points.iter().map(|p| DVector::from_column_slice(p.as_slice())).collect()
}

/// Friction pyramid of wheel `i` (apex at zero force).
pub fn wheel_force_polytope(contacts: &ContactSet, _wheel: usize) -> Result<VPolytope> {
    let mut pts = vec![Vec3::zeros()];
    pts.extend(contacts.pyramid_corners());
    convex_hull(&vecs(&pts))
}

/// Segment from zero to full pull of rope `i`.
pub fn rope_force_polytope(contacts: &ContactSet, rope: usize) -> Result<VPolytope> {
    convex_hull(&vecs(&[contacts.rope_pull(rope), Vec3::zeros()]))
}

/// `f -> (f, p x f)` for every force vertex.
pub fn lift_to_wrench(forces: &VPolytope, point: &Vec3) -> Vec<DVector<f64>> {
    forces
        .vertices
        .iter()
        .map(|f| {
            let f = Vec3::new(f[0], f[1], f[2]);
            Wrench { force: f, moment: point.cross(&f) }.to_vector()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fwp {
    /// Vertex combinations before hulling.
    pub raw_combinations: usize,
    pub vertices: VPolytope,
    pub facets: HPolytope,
}

/// Minkowski sum of the four contact wrench polytopes under actuation limits.
pub fn build_fwp(contacts: &ContactSet) -> Result<Fwp> {
    contacts.check()?;
    let mut factors = Vec::with_capacity(4);
    for i in 0..2 {
        factors.push(convex_hull(&lift_to_wrench(&wheel_force_polytope(contacts, i)?, &contacts.wheels[i]))?);
    }
    for i in 0..2 {
        factors.push(convex_hull(&lift_to_wrench(&rope_force_polytope(contacts, i)?, &contacts.attachments[i]))?);
    }
    let raw_combinations = factors.iter().map(|f| f.len()).product();
    let mut sum = factors[0].clone();
    for f in &factors[1..] {
        sum = minkowski_sum(&sum, f)?;
    }
    if sum.is_degenerate() {
        return Err(WrenchError::Degenerate { rank: sum.rank, dim: 6 });
    }
    let facets = v_to_h(&sum)?;
    Ok(Fwp { raw_combinations, vertices: sum, facets })
}

/// Weight and its moment about the CoM (zero by construction).
pub fn gravitational_wrench(scenario: &Scenario) -> Wrench {
    Wrench { force: scenario.weight(), moment: Vec3::zeros() }
}

/// Contact points for the robot CoM at `p`.
pub fn contact_geometry(p: &Vec3, scenario: &Scenario) -> ContactSet {
    let frame = contact_frame(&scenario.contact_normal);
    let n: Vec3 = frame.column(2).into();
    let lateral: Vec3 = frame.column(1).into();
    let up = n.cross(&lateral);
    let base = -n * scenario.d_w + up * scenario.wheel_z_offset;
    let wheels = [base - lateral * (scenario.d_b / 2.0), base + lateral * (scenario.d_b / 2.0)];
    let attachments = [-lateral * (scenario.d_h / 2.0), lateral * (scenario.d_h / 2.0)];
    let anchors = [scenario.anchor_left, scenario.anchor_right];
    let rope_axes = [0, 1].map(|i| (p + attachments[i] - anchors[i]).normalize());
    ContactSet {
        wheels,
        attachments,
        rope_axes,
        contact_normal: n,
        mu: scenario.mu,
        f_leg_max: scenario.f_leg_max,
        f_r_max: scenario.f_r_max,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Limits {
    On,
    Off,
}

/// Whether admissible contact forces producing `w` exist, decided by an LP
/// over pyramid-edge weights and rope tensions.
pub fn force_existence(contacts: &ContactSet, w: &Wrench, limits: Limits) -> Result<bool> {
    contacts.check()?;
    let scale = contacts.f_leg_max.max(contacts.f_r_max);
    // Columns: 4 edge weights per wheel, one tension per rope.
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(10);
    for i in 0..2 {
        for c in contacts.pyramid_corners() {
            cols.push(Wrench { force: c, moment: contacts.wheels[i].cross(&c) }.to_vector() / scale);
        }
    }
    for i in 0..2 {
        let f = contacts.rope_pull(i);
        cols.push(Wrench { force: f, moment: contacts.attachments[i].cross(&f) }.to_vector() / scale);
    }
    let n = cols.len();
    let a_eq = DMatrix::from_fn(6, n, |r, c| cols[c][r]);
    let b_eq = w.to_vector() / scale;
    let (a_ub, b_ub, upper) = match limits {
        Limits::On => {
            let mut a = DMatrix::zeros(2, n);
            for i in 0..2 {
                for k in 0..4 {
                    a[(i, 4 * i + k)] = 1.0;
                }
            }
            let mut hi = DVector::from_element(n, f64::INFINITY);
            hi[8] = 1.0;
            hi[9] = 1.0;
            (a, DVector::from_element(2, 1.0), hi)
        }
        Limits::Off => (DMatrix::zeros(0, n), DVector::zeros(0), DVector::from_element(n, f64::INFINITY)),
    };
    let lp = LpProblem::new(DVector::zeros(n), a_ub, b_ub).with_equalities(a_eq, b_eq).with_bounds(DVector::zeros(n), upper);
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

/// Static equilibrium at CoM position `p`. With limits off only
/// unilaterality and friction are enforced.
pub fn feasibility(p: &Vec3, scenario: &Scenario, limits: Limits) -> Result<bool> {
    let contacts = contact_geometry(p, scenario);
    let balance = -gravitational_wrench(scenario);
    match limits {
        Limits::Off => force_existence(&contacts, &balance, Limits::Off),
        Limits::On => Ok(build_fwp(&contacts)?.facets.contains(&balance.to_vector())),
    }
}

/// Margin along `direction` from the equilibrium wrench at `p`.
pub fn margin_at(p: &Vec3, direction: &DVector<f64>, scenario: &Scenario) -> Result<Margin> {
    let fwp = build_fwp(&contact_geometry(p, scenario))?;
    directional_margin(&fwp.facets, &(-gravitational_wrench(scenario)).to_vector(), direction)
}

/// Regular grid over (Y, Z) at fixed X; bounds are inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<Vec3> {
        let zs = linspace(self.z_min, self.z_max, self.nz);
        linspace(self.y_min, self.y_max, self.ny)
            .into_iter()
            .flat_map(|y| zs.iter().map(move |&z| (y, z)))
            .map(|(y, z)| Vec3::new(self.x, y, z))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub y: f64,
    pub z: f64,
    /// Zero whenever the equilibrium wrench is outside the polytope.
    pub gamma: f64,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid: GridSpec,
    pub direction: Vec<f64>,
    /// Y-major order.
    pub cells: Vec<HeatCell>,
}

impl Heatmap {
    pub fn cell(&self, y: f64, z: f64) -> Option<&HeatCell> {
        self.cells.iter().min_by(|a, b| {
            let da = (a.y - y).abs() + (a.z - z).abs();
            let db = (b.y - y).abs() + (b.z - z).abs();
            da.total_cmp(&db)
        })
    }
}

/// Margin along `direction` at every grid cell; cell failures are recorded.
pub fn margin_heatmap(grid: &GridSpec, direction: &DVector<f64>, scenario: &Scenario) -> Result<Heatmap> {
    if direction.len() != 6 {
        return Err(WrenchError::Dimension { expected: 6, got: direction.len() });
    }
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(WrenchError::Invalid { what: "direction", reason: "must have unit norm".into() });
    }
    let cells = grid
        .points()
        .par_iter()
        .map(|p| match margin_at(p, direction, scenario) {
            Ok(m) => HeatCell {
                y: p.y,
                z: p.z,
                gamma: if m.status == MarginStatus::InfeasibleOrigin { 0.0 } else { m.gamma },
                feasible: m.status != MarginStatus::InfeasibleOrigin,
                error: None,
            },
            Err(e) => HeatCell { y: p.y, z: p.z, gamma: 0.0, feasible: false, error: Some(e.to_string()) },
        })
        .collect();
    Ok(Heatmap { grid: grid.clone(), direction: direction.iter().copied().collect(), cells })
}

/// Unit wrench direction along one of the six axes, with sign.
pub fn axis_direction(axis: usize, negative: bool) -> DVector<f64> {
    DVector::from_fn(6, |i, _| if i == axis { if negative { -1.0 } else { 1.0 } } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn contacts() -> ContactSet {
        contact_geometry(&Vec3::new(1.5, 2.5, -6.5), &Scenario::landing())
    }

    #[test]
    fn wheel_pyramid_values() {
        let c = contacts();
        let p = wheel_force_polytope(&c, 0).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.vertices.iter().any(|v| v.norm() == 0.0));
        for v in p.vertices.iter().filter(|v| v.norm() > 0.0) {
            assert_relative_eq!(v[0], 600.0, epsilon = 1e-9);
            assert_relative_eq!(v[1].abs(), 480.0, epsilon = 1e-9);
            assert_relative_eq!(v[2].abs(), 480.0, epsilon = 1e-9);
        }
        let frame = contact_frame(&c.contact_normal);
        for v in &p.vertices {
            let f = frame.transpose() * Vec3::new(v[0], v[1], v[2]);
            assert!(f.z >= 0.0);
            assert!(f.x.abs() <= c.mu * f.z + 1e-9 && f.y.abs() <= c.mu * f.z + 1e-9);
        }
    }

    #[test]
    fn frictionless_wheel_is_a_segment() {
        let c = ContactSet { mu: 0.0, ..contacts() };
        let p = wheel_force_polytope(&c, 0).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.rank, 1);
    }

    #[test]
    fn rope_segment() {
        let c = ContactSet { rope_axes: [Vec3::new(0.0, 0.0, -1.0); 2], f_r_max: 300.0, ..contacts() };
        let p = rope_force_polytope(&c, 0).unwrap();
        assert_eq!(p.vertices, vec![DVector::zeros(3), DVector::from_column_slice(&[0.0, 0.0, 300.0])]);
        for v in &p.vertices {
            assert!(Vec3::new(v[0], v[1], v[2]).dot(&c.rope_axes[0]) <= 0.0);
        }
    }

    #[test]
    fn lifting() {
        let f = convex_hull(&[DVector::from_column_slice(&[1.0, 2.0, 3.0]), DVector::zeros(3)]).unwrap();
        assert!(lift_to_wrench(&f, &Vec3::zeros()).iter().all(|w| w.rows(3, 3).norm() == 0.0));
        assert!(lift_to_wrench(&f, &Vec3::new(2.0, 4.0, 6.0)).iter().all(|w| w.rows(3, 3).norm() < 1e-12));
        let p = Vec3::new(0.3, -0.2, 0.5);
        for w in lift_to_wrench(&f, &p) {
            let force = Vec3::new(w[0], w[1], w[2]);
            let m = Vec3::new(p.y * force.z - p.z * force.y, p.z * force.x - p.x * force.z, p.x * force.y - p.y * force.x);
            assert!((Vec3::new(w[3], w[4], w[5]) - m).norm() < 1e-12);
        }
    }

    #[test]
    fn gravity_wrench() {
        let w = gravitational_wrench(&Scenario::landing());
        assert_relative_eq!(w.force, Vec3::new(0.0, 0.0, -147.15), epsilon = 1e-9);
        assert_eq!(w.moment, Vec3::zeros());
        let zero = gravitational_wrench(&Scenario { mass: 0.0, ..Scenario::default() });
        assert_eq!(zero.force.norm(), 0.0);
    }

    #[test]
    fn geometry_offsets_and_symmetry() {
        let s = Scenario::landing();
        let c = contact_geometry(&Vec3::new(1.5, 2.5, -6.0), &s);
        assert_relative_eq!(c.wheels[0].y, -0.4);
        assert_relative_eq!(c.wheels[1].y, 0.4);
        assert_relative_eq!(c.rope_axes[0].y, -c.rope_axes[1].y, epsilon = 1e-12);
        assert_relative_eq!(c.rope_axes[0].z, c.rope_axes[1].z, epsilon = 1e-12);
        let p = Vec3::new(1.5, 1.0, -7.0);
        let c = contact_geometry(&p, &s);
        let len = (p + c.attachments[0] - s.anchor_left).norm();
        let direct = ((1.5f64).powi(2) + (1.0 - s.d_h / 2.0).powi(2) + 49.0).sqrt();
        assert_relative_eq!(len, direct, epsilon = 1e-12);
    }

    #[test]
    fn fwp_counts_and_origin() {
        let fwp = build_fwp(&contacts()).unwrap();
        assert_eq!(fwp.raw_combinations, 100);
        assert!(fwp.facets.contains(&DVector::zeros(6)));
        assert!(!fwp.vertices.is_degenerate());
    }

    #[test]
    fn example_position_is_feasible() {
        let s = Scenario::landing();
        let p = Vec3::new(1.5, 2.5, -6.5);
        assert!(feasibility(&p, &s, Limits::On).unwrap());
        assert!(feasibility(&p, &s, Limits::Off).unwrap());
        let far = Vec3::new(1.5, 12.0, -6.5);
        assert!(!feasibility(&far, &s, Limits::Off).unwrap());
        assert!(!feasibility(&far, &s, Limits::On).unwrap());
    }
}
