//! Bounded convex polytopes in vertex (V) and half-space (H) form.
//!
//! Facets are enumerated with the double description method on the
//! homogenized cone `{(b, -a) : b - a.v >= 0 for every generator v}`, whose
//! extreme rays are exactly the facet inequalities `a.x <= b`.

use nalgebra::{DMatrix, DVector};
use ropeclimb_core::optim::{solve_lp, LpProblem, LpStatus};
use serde::{Deserialize, Serialize};

use crate::{Result, WrenchError};

/// Zero test on unit-normalized rays and rows.
const RAY_TOL: f64 = 1e-9;
/// Row tolerance for membership and tightness, in the units of the data.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub dim: usize,
    /// Lexicographically sorted.
    pub vertices: Vec<DVector<f64>>,
    /// Affine rank of the vertex set.
    pub rank: usize,
}

impl VPolytope {
    /// A polytope is flat when its affine hull is a proper subspace.
    pub fn is_degenerate(&self) -> bool {
        self.rank < self.dim
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Whether `w` is a convex combination of the vertices (LP test).
    pub fn contains(&self, w: &DVector<f64>) -> Result<bool> {
        vertex_membership(&self.vertices, w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub dim: usize,
    /// Unit outward normals.
    pub normals: Vec<DVector<f64>>,
    pub offsets: Vec<f64>,
}

impl HPolytope {
    /// Rows `a_j . x <= b_j`; each row is rescaled to a unit normal.
    pub fn new(dim: usize, rows: Vec<(DVector<f64>, f64)>) -> Result<Self> {
        let mut normals = Vec::with_capacity(rows.len());
        let mut offsets = Vec::with_capacity(rows.len());
        for (a, b) in rows {
            if a.len() != dim {
                return Err(WrenchError::Dimension { expected: dim, got: a.len() });
            }
            let n = a.norm();
            if !(n > 0.0) || !b.is_finite() {
                return Err(WrenchError::Invalid { what: "half-space", reason: "zero or non-finite normal".into() });
            }
            normals.push(a / n);
            offsets.push(b / n);
        }
        Ok(HPolytope { dim, normals, offsets })
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Largest row violation `max_j a_j.w - b_j`.
    pub fn max_violation(&self, w: &DVector<f64>) -> f64 {
        self.normals.iter().zip(&self.offsets).map(|(a, b)| a.dot(w) - b).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Closed-set membership with [`MEMBERSHIP_TOL`].
    pub fn contains(&self, w: &DVector<f64>) -> bool {
        self.is_empty() || self.max_violation(w) <= MEMBERSHIP_TOL
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginStatus {
    Bounded,
    /// The starting point is already outside; the margin is reported as 0.
    InfeasibleOrigin,
    /// No row limits the ray.
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub gamma: f64,
    pub status: MarginStatus,
}

/// `max gamma` such that `w0 + gamma v` stays inside `h`. With a single
/// variable the LP reduces to a ratio test over the rows.
pub fn directional_margin(h: &HPolytope, w0: &DVector<f64>, v: &DVector<f64>) -> Result<Margin> {
    if w0.len() != h.dim || v.len() != h.dim {
        return Err(WrenchError::Dimension { expected: h.dim, got: w0.len().max(v.len()) });
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(WrenchError::Invalid { what: "direction", reason: "must have unit norm".into() });
    }
    if !h.contains(w0) {
        return Ok(Margin { gamma: 0.0, status: MarginStatus::InfeasibleOrigin });
    }
    let mut gamma = f64::INFINITY;
    for (a, b) in h.normals.iter().zip(&h.offsets) {
        let rate = a.dot(v);
        if rate > 1e-12 {
            gamma = gamma.min(((b - a.dot(w0)) / rate).max(0.0));
        }
    }
    Ok(if gamma.is_finite() {
        Margin { gamma, status: MarginStatus::Bounded }
    } else {
        Margin { gamma, status: MarginStatus::Unbounded }
    })
}

/// Whether `w` lies in the convex hull of `points`, decided by an LP on the
/// convex-combination weights.
pub fn vertex_membership(points: &[DVector<f64>], w: &DVector<f64>) -> Result<bool> {
    let Some(first) = points.first() else {
        return Ok(false);
    };
    let d = first.len();
    if w.len() != d {
        return Err(WrenchError::Dimension { expected: d, got: w.len() });
    }
    let scale = points.iter().map(|p| p.amax()).fold(w.amax(), f64::max).max(1.0);
    let n = points.len();
    let mut a_eq = DMatrix::zeros(d + 1, n);
    for (j, p) in points.iter().enumerate() {
        for i in 0..d {
            a_eq[(i, j)] = p[i] / scale;
        }
        a_eq[(d, j)] = 1.0;
    }
    let mut b_eq = DVector::zeros(d + 1);
    for i in 0..d {
        b_eq[i] = w[i] / scale;
    }
    b_eq[d] = 1.0;
    let lp = LpProblem::new(DVector::zeros(n), DMatrix::zeros(0, n), DVector::zeros(0))
        .with_equalities(a_eq, b_eq)
        .with_bounds(DVector::zeros(n), DVector::from_element(n, f64::INFINITY));
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

#[derive(Clone, Debug)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn subset_of(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & !b == 0)
    }
}

struct Ray {
    y: DVector<f64>,
    zeros: Bits,
}

/// Extreme rays of the pointed cone `{y : r_i . y >= 0}`.
fn cone_rays(rows: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let m = rows.len();
    let dim = rows[0].len();
    let rows: Vec<DVector<f64>> = rows.iter().map(|r| r / r.norm()).collect();

    // Greedy well-conditioned basis.
    let mut basis = Vec::with_capacity(dim);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut best = (0.0, usize::MAX, None);
        for (i, r) in rows.iter().enumerate() {
            if basis.contains(&i) {
                continue;
            }
            let mut res = r.clone();
            for q in &ortho {
                res -= q * q.dot(&res);
            }
            let nrm = res.norm();
            if nrm > best.0 {
                best = (nrm, i, Some(res));
            }
        }
        if best.0 < 1e-9 {
            return Err(WrenchError::Degenerate { rank: basis.len(), dim });
        }
        basis.push(best.1);
        ortho.push(best.2.unwrap() / best.0);
    }
    let a_b = DMatrix::from_fn(dim, dim, |i, j| rows[basis[i]][j]);
    let inv = a_b.try_inverse().ok_or(WrenchError::Degenerate { rank: dim - 1, dim })?;

    let mut rays: Vec<Ray> = (0..dim)
        .map(|j| {
            let y: DVector<f64> = inv.column(j).into();
            let mut zeros = Bits::new(m);
            for (k, &b) in basis.iter().enumerate() {
                if k != j {
                    zeros.set(b);
                }
            }
            Ray { y: &y / y.norm(), zeros }
        })
        .collect();

    for i in (0..m).filter(|i| !basis.contains(i)) {
        let vals: Vec<f64> = rays.iter().map(|r| rows[i].dot(&r.y)).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] < -RAY_TOL).collect();
        if neg.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if vals[k].abs() <= RAY_TOL {
                    r.zeros.set(i);
                }
            }
            continue;
        }
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] > RAY_TOL).collect();
        let mut fresh = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if common.count() + 2 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == p || k == n || !common.subset_of(&r.zeros));
                if !adjacent {
                    continue;
                }
                let y = &rays[n].y * vals[p] - &rays[p].y * vals[n];
                let mut zeros = common;
                zeros.set(i);
                fresh.push(Ray { y: &y / y.norm(), zeros });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k] >= -RAY_TOL {
                if vals[k] <= RAY_TOL {
                    r.zeros.set(i);
                }
                kept.push(r);
            }
        }
        kept.extend(fresh);
        rays = kept;
    }
    Ok(rays.into_iter().map(|r| r.y).collect())
}

/// Facets `a.x <= b` of the hull of full-dimensional points in R^k.
fn facets_full(points: &[DVector<f64>]) -> Result<Vec<(DVector<f64>, f64)>> {
    let k = points[0].len();
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let rows: Vec<DVector<f64>> = points
        .iter()
        .map(|p| DVector::from_fn(k + 1, |i, _| if i == 0 { 1.0 } else { p[i - 1] / scale }))
        .collect();
    let rays = cone_rays(&rows)?;
    let mut out = Vec::with_capacity(rays.len());
    for y in rays {
        let a = DVector::from_fn(k, |i, _| -y[i + 1]);
        let n = a.norm();
        if n < 1e-12 {
            continue;
        }
        out.push((a / n, y[0] * scale / n));
    }
    Ok(out)
}

struct AffineFrame {
    origin: DVector<f64>,
    basis: Vec<DVector<f64>>,
}

impl AffineFrame {
    fn of(points: &[DVector<f64>]) -> Self {
        let origin = points[0].clone();
        let scale = points.iter().map(|p| (p - &origin).amax()).fold(0.0, f64::max);
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let dim = origin.len();
        // Pivoted Gram-Schmidt over the difference vectors.
        let mut diffs: Vec<DVector<f64>> = points.iter().map(|p| p - &origin).collect();
        while basis.len() < dim {
            let (idx, nrm) = diffs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, d.norm()))
                .fold((usize::MAX, 0.0), |b, c| if c.1 > b.1 { c } else { b });
            if idx == usize::MAX || nrm <= 1e-9 * scale.max(1e-300) || scale == 0.0 {
                break;
            }
            let q = &diffs[idx] / nrm;
            for d in diffs.iter_mut() {
                let c = q.dot(d);
                *d -= &q * c;
            }
            basis.push(q);
        }
        AffineFrame { origin, basis }
    }

    fn local(&self, p: &DVector<f64>) -> DVector<f64> {
        let d = p - &self.origin;
        DVector::from_fn(self.basis.len(), |i, _| self.basis[i].dot(&d))
    }
}

fn rank_of(vectors: &[&DVector<f64>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(vectors.len(), vectors[0].len(), |i, j| vectors[i][j]);
    m.rank(tol)
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

fn dedup(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let mut sorted = points.to_vec();
    sorted.sort_by(lex_cmp);
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if !out.iter().any(|q| (q - &p).amax() <= 1e-12 * scale) {
            out.push(p);
        }
    }
    out
}

/// Minimal vertex set of the hull of `points`. Flat inputs are hulled inside
/// their affine span and flagged through [`VPolytope::rank`].
pub fn convex_hull(points: &[DVector<f64>]) -> Result<VPolytope> {
    let Some(first) = points.first() else {
        return Err(WrenchError::Empty);
    };
    let dim = first.len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(WrenchError::Dimension { expected: dim, got: bad.len() });
    }
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(WrenchError::Invalid { what: "points", reason: "non-finite coordinate".into() });
    }
    let pts = dedup(points);
    let frame = AffineFrame::of(&pts);
    let rank = frame.basis.len();
    if rank == 0 {
        return Ok(VPolytope { dim, vertices: vec![pts[0].clone()], rank });
    }
    let local: Vec<DVector<f64>> = pts.iter().map(|p| frame.local(p)).collect();
    let facets = facets_full(&local)?;
    let scale = local.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let mut vertices: Vec<DVector<f64>> = pts
        .iter()
        .zip(&local)
        .filter(|(_, l)| {
            let tight: Vec<&DVector<f64>> = facets.iter().filter(|(a, b)| (a.dot(l) - b).abs() <= 1e-9 * scale).map(|(a, _)| a).collect();
            rank_of(&tight, 1e-9) == rank
        })
        .map(|(p, _)| p.clone())
        .collect();
    vertices.sort_by(lex_cmp);
    Ok(VPolytope { dim, vertices, rank })
}

/// Hull of all pairwise vertex sums.
pub fn minkowski_sum(p: &VPolytope, q: &VPolytope) -> Result<VPolytope> {
    if p.dim != q.dim {
        return Err(WrenchError::Dimension { expected: p.dim, got: q.dim });
    }
    let sums: Vec<DVector<f64>> = p.vertices.iter().flat_map(|a| q.vertices.iter().map(move |b| a + b)).collect();
    convex_hull(&sums)
}

/// Facet description of a full-dimensional V-polytope.
pub fn v_to_h(p: &VPolytope) -> Result<HPolytope> {
    if p.is_degenerate() {
        return Err(WrenchError::Degenerate { rank: p.rank, dim: p.dim });
    }
    let rows = facets_full(&p.vertices)?;
    HPolytope::new(p.dim, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn cube(d: usize) -> Vec<DVector<f64>> {
        (0..1usize << d).map(|mask| DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })).collect()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<DVector<f64>> {
        (0..n).map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn cube_interior_point_is_dropped() {
        let mut pts = cube(3);
        pts.push(v(&[0.0, 0.0, 0.0]));
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 8);
        assert!(!hull.is_degenerate());
    }

    #[test]
    fn segment_keeps_both_ends() {
        let hull = convex_hull(&[v(&[0.0, 0.0, 0.0]), v(&[1.0, 2.0, 3.0]), v(&[0.5, 1.0, 1.5])]).unwrap();
        assert_eq!(hull.len(), 2);
        assert_eq!(hull.rank, 1);
        assert!(v_to_h(&hull).is_err());
    }

    #[test]
    fn cube_and_simplex_facets() {
        assert_eq!(v_to_h(&convex_hull(&cube(3)).unwrap()).unwrap().len(), 6);
        let simplex = [v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        assert_eq!(v_to_h(&convex_hull(&simplex).unwrap()).unwrap().len(), 4);
        assert_eq!(v_to_h(&convex_hull(&cube(6)).unwrap()).unwrap().len(), 12);
    }

    #[test]
    fn cube_membership() {
        let h = v_to_h(&convex_hull(&cube(3)).unwrap()).unwrap();
        assert!(h.contains(&v(&[0.0, 0.0, 0.0])));
        assert!(!h.contains(&v(&[2.0, 0.0, 0.0])));
        assert!(h.contains(&v(&[1.0, 0.3, -0.2])));
    }

    #[test]
    fn rectangle_from_segments() {
        let a = convex_hull(&[v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let b = convex_hull(&[v(&[0.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let sum = minkowski_sum(&a, &b).unwrap();
        assert_eq!(sum.len(), 4);
        assert!(!sum.is_degenerate());
    }

    #[test]
    fn zero_is_the_sum_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = convex_hull(&random_points(&mut rng, 20, 3)).unwrap();
        let zero = convex_hull(&[v(&[0.0, 0.0, 0.0])]).unwrap();
        assert_eq!(minkowski_sum(&p, &zero).unwrap(), p);
    }

    #[test]
    fn box_margin() {
        let h = v_to_h(&convex_hull(&cube(6)).unwrap()).unwrap();
        let e3 = DVector::from_fn(6, |i, _| if i == 2 { 1.0 } else { 0.0 });
        let m = directional_margin(&h, &DVector::zeros(6), &e3).unwrap();
        assert_eq!(m.status, MarginStatus::Bounded);
        assert!((m.gamma - 1.0).abs() < 1e-12);
        let out = directional_margin(&h, &DVector::from_element(6, 2.0), &e3).unwrap();
        assert_eq!(out, Margin { gamma: 0.0, status: MarginStatus::InfeasibleOrigin });
    }

    #[test]
    fn unbounded_ray() {
        let h = HPolytope::new(2, vec![(v(&[1.0, 0.0]), 1.0)]).unwrap();
        let m = directional_margin(&h, &v(&[0.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
        assert_eq!(m.status, MarginStatus::Unbounded);
    }

    #[test]
    fn random_hull_contains_its_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_points(&mut rng, 100, 3);
        let hull = convex_hull(&pts).unwrap();
        for p in &pts {
            assert!(hull.contains(p).unwrap());
        }
        let h = v_to_h(&hull).unwrap();
        for p in &pts {
            assert!(h.max_violation(p) <= 1e-8);
        }
    }

    #[test]
    fn six_dimensional_dual_classification() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_points(&mut rng, 30, 6);
        let hull = convex_hull(&pts).unwrap();
        let h = v_to_h(&hull).unwrap();
        // Every facet is supported by at least d vertices.
        for (a, b) in h.normals.iter().zip(&h.offsets) {
            let support = hull.vertices.iter().filter(|x| (a.dot(x) - b).abs() <= 1e-8).count();
            assert!(support >= 6);
            assert!(hull.vertices.iter().all(|x| a.dot(x) <= b + 1e-8));
        }
        let mut agree = 0;
        for _ in 0..500 {
            let w = DVector::from_fn(6, |_, _| rng.random_range(-0.8..0.8));
            let by_h = h.contains(&w);
            let by_v = hull.contains(&w).unwrap();
            assert_eq!(by_h, by_v, "{w:?}");
            agree += 1;
        }
        assert_eq!(agree, 500);
    }

    #[test]
    fn margin_matches_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = v_to_h(&convex_hull(&random_points(&mut rng, 40, 6)).unwrap()).unwrap();
        let w0 = DVector::zeros(6);
        for _ in 0..20 {
            let dir = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let m = directional_margin(&h, &w0, &dir).unwrap();
            if m.status != MarginStatus::Bounded {
                continue;
            }
            let (mut lo, mut hi) = (0.0, 10.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h.max_violation(&(&w0 + &dir * mid)) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((m.gamma - lo).abs() <= 1e-6);
        }
    }

    #[test]
    fn dropping_a_vertex_never_grows_the_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts = random_points(&mut rng, 25, 3);
        let hull = convex_hull(&pts).unwrap();
        let full = v_to_h(&hull).unwrap();
        let smaller = v_to_h(&convex_hull(&hull.vertices[1..]).unwrap()).unwrap();
        let w0 = hull.vertices.iter().fold(DVector::zeros(3), |s, x| s + x) / hull.len() as f64;
        for _ in 0..20 {
            let dir = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let a = directional_margin(&full, &w0, &dir).unwrap().gamma;
            let b = directional_margin(&smaller, &w0, &dir).unwrap().gamma;
            assert!(b <= a + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hull_is_idempotent(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hull = convex_hull(&random_points(&mut rng, 30, 3)).unwrap();
            prop_assert_eq!(convex_hull(&hull.vertices).unwrap(), hull);
        }

        #[test]
        fn sum_is_commutative_and_contains_samples(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = convex_hull(&random_points(&mut rng, 8, 3)).unwrap();
            let q = convex_hull(&random_points(&mut rng, 8, 3)).unwrap();
            let pq = minkowski_sum(&p, &q).unwrap();
            prop_assert_eq!(&pq, &minkowski_sum(&q, &p).unwrap());
            let h = v_to_h(&pq).unwrap();
            for _ in 0..200 {
                let mut wp: Vec<f64> = (0..p.len()).map(|_| rng.random::<f64>()).collect();
                let sp: f64 = wp.iter().sum();
                wp.iter_mut().for_each(|x| *x /= sp);
                let a = p.vertices.iter().zip(&wp).fold(DVector::zeros(3), |s, (x, w)| s + x * *w);
                let b = &q.vertices[rng.random_range(0..q.len())];
                prop_assert!(h.contains(&(a + b)));
            }
        }

        #[test]
        fn sum_is_associative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = convex_hull(&random_points(&mut rng, 5, 3)).unwrap();
            let q = convex_hull(&random_points(&mut rng, 5, 3)).unwrap();
            let r = convex_hull(&random_points(&mut rng, 5, 3)).unwrap();
            let left = minkowski_sum(&minkowski_sum(&p, &q).unwrap(), &r).unwrap();
            let right = minkowski_sum(&p, &minkowski_sum(&q, &r).unwrap()).unwrap();
            prop_assert_eq!(left.len(), right.len());
            for (a, b) in left.vertices.iter().zip(&right.vertices) {
                prop_assert!((a - b).amax() < 1e-9);
            }
        }

        #[test]
        fn duality_on_random_probes(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hull = convex_hull(&random_points(&mut rng, 12, 3)).unwrap();
            let h = v_to_h(&hull).unwrap();
            for _ in 0..1000 {
                let w = DVector::from_fn(3, |_, _| rng.random_range(-1.2..1.2));
                // Skip probes within tolerance of the boundary.
                if h.max_violation(&w).abs() < 1e-6 {
                    continue;
                }
                prop_assert_eq!(h.contains(&w), hull.contains(&w).unwrap());
            }
        }
    }
}
