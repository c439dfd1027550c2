//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c.x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq` and
//! per-variable bounds (either side may be infinite).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub c: DVector<f64>,
    pub a_ub: DMatrix<f64>,
    pub b_ub: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LpProblem {
    /// `min c.x` s.t. `a x <= b`, with all variables free.
    pub fn new(c: DVector<f64>, a_ub: DMatrix<f64>, b_ub: DVector<f64>) -> Self {
        let n = c.len();
        LpProblem {
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            c,
            a_ub,
            b_ub,
        }
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        let ok = self.a_ub.ncols() == n
            && self.a_ub.nrows() == self.b_ub.len()
            && self.a_eq.ncols() == n
            && self.a_eq.nrows() == self.b_eq.len()
            && self.lower.len() == n
            && self.upper.len() == n;
        if !ok {
            return Err(Error::invalid("lp", "inconsistent dimensions"));
        }
        if self.lower.iter().zip(self.upper.iter()).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::invalid("lp", "lower bound above upper bound"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub value: f64,
    /// Non-negative multipliers of the `A_ub` rows (optimal status only).
    pub row_duals: DVector<f64>,
    pub iterations: usize,
}

/// How an original variable maps to the non-negative working variables.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    Shift { col: usize, lo: f64 },
    Mirror { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    m: usize,
    iterations: usize,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..ncols {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Minimize the objective row over the first `active_cols` columns.
    fn optimize(&mut self, active_cols: usize, max_iter: usize) -> Result<PivotOutcome> {
        let obj = self.m;
        let rhs = self.rhs_col();
        let mut stall = 0usize;
        let mut last = self.t[(obj, rhs)];
        for _ in 0..max_iter {
            let bland = stall > 50;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..active_cols {
                let r = self.t[(obj, j)];
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(col) = enter else {
                return Ok(PivotOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, rhs)] / a;
                    let better = match leave {
                        None => true,
                        Some((k, r)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(PivotOutcome::Unbounded);
            };
            self.pivot(row, col);
            let now = self.t[(obj, rhs)];
            if (now - last).abs() <= 1e-14 * last.abs().max(1.0) {
                stall += 1;
            } else {
                stall = 0;
            }
            last = now;
        }
        Err(Error::Solver("simplex iteration limit reached".into()))
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.check()?;
    let n = p.dim();

    // Working variables, all >= 0.
    let mut maps = Vec::with_capacity(n);
    let mut nw = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        let map = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((nw, hi - lo));
            }
            VarMap::Shift { col: nw, lo }
        } else if hi.is_finite() {
            VarMap::Mirror { col: nw, hi }
        } else {
            nw += 1;
            VarMap::Split { pos: nw - 1, neg: nw }
        };
        nw += 1;
        maps.push(map);
    }

    // Express an original row a.x <= b (or =) in working variables.
    let transform = |row: Vec<f64>, b: f64| -> (Vec<f64>, f64) {
        let mut w = vec![0.0; nw];
        let mut rhs = b;
        for (j, map) in maps.iter().enumerate() {
            let a = row[j];
            match *map {
                VarMap::Shift { col, lo } => {
                    w[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    w[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    w[pos] += a;
                    w[neg] -= a;
                }
            }
        }
        (w, rhs)
    };

    let mut ineq: Vec<(Vec<f64>, f64)> = (0..p.a_ub.nrows())
        .map(|i| transform(p.a_ub.row(i).iter().copied().collect(), p.b_ub[i]))
        .collect();
    let n_user_ineq = ineq.len();
    for (col, width) in &bound_rows {
        let mut w = vec![0.0; nw];
        w[*col] = 1.0;
        ineq.push((w, *width));
    }
    let eq: Vec<(Vec<f64>, f64)> = (0..p.a_eq.nrows())
        .map(|i| transform(p.a_eq.row(i).iter().copied().collect(), p.b_eq[i]))
        .collect();
    let (cw, _) = transform(p.c.iter().copied().collect(), 0.0);

    let m_ineq = ineq.len();
    let m = m_ineq + eq.len();
    // Columns: working vars | slacks | artificials | rhs.
    let slack0 = nw;
    let art0 = nw + m_ineq;
    let mut needs_art = Vec::new();
    let mut rows: Vec<(Vec<f64>, f64, Option<f64>)> = Vec::with_capacity(m);
    for (w, b) in ineq {
        if b >= 0.0 {
            rows.push((w, b, Some(1.0)));
        } else {
            rows.push((w.iter().map(|v| -v).collect(), -b, Some(-1.0)));
        }
    }
    for (w, b) in eq {
        if b >= 0.0 {
            rows.push((w, b, None));
        } else {
            rows.push((w.iter().map(|v| -v).collect(), -b, None));
        }
    }
    for (i, (_, _, slack)) in rows.iter().enumerate() {
        if *slack != Some(1.0) {
            needs_art.push(i);
        }
    }
    let n_art = needs_art.len();
    let ncols = art0 + n_art + 1;
    let mut t = DMatrix::zeros(m + 1, ncols);
    let mut basis = vec![0usize; m];
    for (i, (w, b, slack)) in rows.iter().enumerate() {
        for (j, v) in w.iter().enumerate() {
            t[(i, j)] = *v;
        }
        if let Some(sign) = slack {
            t[(i, slack0 + i)] = *sign;
            basis[i] = slack0 + i;
        }
        t[(i, ncols - 1)] = *b;
    }
    for (k, &i) in needs_art.iter().enumerate() {
        t[(i, art0 + k)] = 1.0;
        basis[i] = art0 + k;
    }
    let mut tab = Tableau { t, basis, m, iterations: 0 };
    let max_iter = 50 * (ncols + m) + 1000;

    if n_art > 0 {
        // Phase 1 objective: sum of artificials, priced out of the basis.
        for &i in &needs_art {
            for j in 0..ncols {
                let v = tab.t[(i, j)];
                tab.t[(m, j)] -= v;
            }
        }
        for k in 0..n_art {
            tab.t[(m, art0 + k)] = 0.0;
        }
        tab.optimize(art0 + n_art, max_iter)?;
        let infeas = -tab.t[(m, ncols - 1)];
        if infeas > FEAS_TOL * (1.0 + p.b_ub.amax().max(p.b_eq.amax())) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: DVector::zeros(n),
                value: f64::NAN,
                row_duals: DVector::zeros(p.a_ub.nrows()),
                iterations: tab.iterations,
            });
        }
        // Drive remaining artificials out of the basis.
        let mut drop_rows = Vec::new();
        for i in 0..m {
            if tab.basis[i] >= art0 {
                let col = (0..art0).find(|&j| tab.t[(i, j)].abs() > 1e-9);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => drop_rows.push(i),
                }
            }
        }
        if !drop_rows.is_empty() {
            let keep: Vec<usize> = (0..=m).filter(|i| !drop_rows.contains(i)).collect();
            tab.t = tab.t.select_rows(keep.iter());
            tab.basis = keep[..keep.len() - 1].iter().map(|&i| tab.basis[i]).collect();
            tab.m = tab.basis.len();
        }
    }

    // Phase 2 objective row over the non-artificial columns.
    let m = tab.m;
    let rhs = tab.rhs_col();
    for j in 0..tab.t.ncols() {
        tab.t[(m, j)] = 0.0;
    }
    for (j, c) in cw.iter().enumerate() {
        tab.t[(m, j)] = *c;
    }
    for i in 0..m {
        let b = tab.basis[i];
        let cb = tab.t[(m, b)];
        if cb != 0.0 {
            for j in 0..tab.t.ncols() {
                let v = tab.t[(i, j)];
                tab.t[(m, j)] -= cb * v;
            }
        }
    }
    for k in 0..n_art {
        for i in 0..=m {
            tab.t[(i, art0 + k)] = 0.0;
        }
    }
    let outcome = tab.optimize(art0, max_iter)?;
    if let PivotOutcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: DVector::zeros(n),
            value: f64::NEG_INFINITY,
            row_duals: DVector::zeros(p.a_ub.nrows()),
            iterations: tab.iterations,
        });
    }

    let mut xw = vec![0.0; nw];
    for i in 0..m {
        let b = tab.basis[i];
        if b < nw {
            xw[b] = tab.t[(i, rhs)];
        }
    }
    let x = DVector::from_fn(n, |j, _| match maps[j] {
        VarMap::Shift { col, lo } => lo + xw[col],
        VarMap::Mirror { col, hi } => hi - xw[col],
        VarMap::Split { pos, neg } => xw[pos] - xw[neg],
    });
    let row_duals = DVector::from_fn(n_user_ineq, |i, _| tab.t[(m, slack0 + i)].max(0.0));
    let value = p.c.dot(&x);
    Ok(LpSolution { status: LpStatus::Optimal, x, value, row_duals, iterations: tab.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_upper_bound() {
        // max g s.t. g <= 1
        let p = LpProblem::new(DVector::from_element(1, -1.0), DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 1.0));
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.x[0], 1.0);
    }

    #[test]
    fn unconstrained_ray_is_unbounded() {
        let p = LpProblem::new(DVector::from_element(1, -1.0), DMatrix::zeros(0, 1), DVector::zeros(0));
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_row_slice(&[1.0, -2.0]);
        let p = LpProblem::new(DVector::from_element(1, 1.0), a, b);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_bounds() {
        // min x + 2y s.t. x + y = 3, 0 <= x <= 2, y >= 0 -> (2, 1)
        let p = LpProblem::new(DVector::from_row_slice(&[1.0, 2.0]), DMatrix::zeros(0, 2), DVector::zeros(0))
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 3.0))
            .with_bounds(DVector::from_row_slice(&[0.0, 0.0]), DVector::from_row_slice(&[2.0, f64::INFINITY]));
        let s = solve_lp(&p).unwrap();
        assert_relative_eq!(s.x, DVector::from_row_slice(&[2.0, 1.0]), epsilon = 1e-12);
        assert_relative_eq!(s.value, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn mirrored_variable() {
        // max x s.t. x <= 4 as a bound only
        let p = LpProblem::new(DVector::from_element(1, -1.0), DMatrix::zeros(0, 1), DVector::zeros(0))
            .with_bounds(DVector::from_element(1, f64::NEG_INFINITY), DVector::from_element(1, 4.0));
        let s = solve_lp(&p).unwrap();
        assert_relative_eq!(s.x[0], 4.0);
    }

    /// Enumerate every vertex of {A x <= b} (n choose active rows) and keep the best.
    fn brute_force(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<f64> {
        let (m, n) = a.shape();
        let mut best: Option<f64> = None;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let sub = a.select_rows(idx.iter());
            let rhs = DVector::from_fn(n, |i, _| b[idx[i]]);
            if let Some(x) = sub.clone().lu().solve(&rhs) {
                if sub.determinant().abs() > 1e-9 && (a * &x - b).max() <= 1e-9 {
                    let v = c.dot(&x);
                    best = Some(best.map_or(v, |w: f64| w.min(v)));
                }
            }
            // next combination
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] < m - n + k {
                    idx[k] += 1;
                    for j in k + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn random_bounded_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.random_range(1..=5);
            let extra = rng.random_range(1..=6);
            // Box rows keep every instance bounded and feasible.
            let m = 2 * n + extra;
            let mut a = DMatrix::zeros(m, n);
            let mut b = DVector::zeros(m);
            for j in 0..n {
                a[(2 * j, j)] = 1.0;
                a[(2 * j + 1, j)] = -1.0;
                b[2 * j] = rng.random_range(0.5..3.0);
                b[2 * j + 1] = rng.random_range(0.5..3.0);
            }
            for i in 2 * n..m {
                for j in 0..n {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
                b[i] = rng.random_range(0.1..2.0);
            }
            let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let s = solve_lp(&LpProblem::new(c.clone(), a.clone(), b.clone())).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((&a * &s.x - &b).max() <= 1e-8);
            let oracle = brute_force(&c, &a, &b).unwrap();
            assert!((s.value - oracle).abs() <= 1e-7, "{} vs {}", s.value, oracle);

            // Certificate: lambda >= 0, c + A' lambda = 0, complementary slackness.
            let station = &c + a.transpose() * &s.row_duals;
            assert!(station.amax() <= 1e-8, "stationarity {}", station.amax());
            for i in 0..m {
                let slack = b[i] - a.row(i).dot(&s.x.transpose());
                assert!((s.row_duals[i] * slack).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_lp_terminates() {
        // Many rows through the optimum vertex.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..20 {
            let t = k as f64 * 0.05;
            rows.extend_from_slice(&[1.0, t, 1.0 - t]);
            rhs.push(1.0);
        }
        let a = DMatrix::from_row_slice(20, 3, &rows);
        let p = LpProblem::new(DVector::from_row_slice(&[-1.0, -1.0, -1.0]), a, DVector::from_vec(rhs))
            .with_bounds(DVector::zeros(3), DVector::from_element(3, f64::INFINITY));
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.value, -2.0, epsilon = 1e-9);
    }
}
