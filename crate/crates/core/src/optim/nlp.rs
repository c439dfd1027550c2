//! Sequential quadratic programming for small dense problems
//!
//! ```text
//! min f(x)  s.t.  g(x) <= 0,  lower <= x <= upper
//! ```
//!
//! Each iteration solves a convex QP model with an elastic variable so the
//! linearized constraints are always satisfiable, then backtracks on an l1
//! merit function. The Hessian model is damped BFGS, or Gauss-Newton when
//! the problem exposes least-squares residuals (`f = 0.5 |r|^2`). Variable
//! bounds are never violated by iterates. Scaling of the variables is left
//! to the caller.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fd::{self, FdScheme};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    /// Inequality values, feasible when `<= 0`.
    pub constraints: DVector<f64>,
    /// When present the objective must equal `0.5 |residuals|^2`.
    pub residuals: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub gradient: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub residual_jacobian: Option<DMatrix<f64>>,
}

pub trait NlpProblem: Sync {
    fn dim(&self) -> usize;
    fn lower(&self) -> DVector<f64>;
    fn upper(&self) -> DVector<f64>;
    fn evaluate(&self, x: &DVector<f64>) -> Result<Evaluation>;

    /// Analytic derivatives; `None` falls back to finite differences.
    fn derivatives(&self, _x: &DVector<f64>, _at: &Evaluation) -> Option<Result<Derivatives>> {
        None
    }
}

type ObjFn = dyn Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)> + Sync;
type ResFn = dyn Fn(&DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> + Sync;

enum Body {
    Objective(Box<ObjFn>),
    Residuals(Box<ResFn>),
}

/// Closure-backed problem.
pub struct FnProblem {
    n: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
    body: Body,
}

impl FnProblem {
    /// `f` returns the objective and the constraint values.
    pub fn new(n: usize, f: impl Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)> + Sync + 'static) -> Self {
        FnProblem {
            n,
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            body: Body::Objective(Box::new(f)),
        }
    }

    /// `f` returns residuals and constraint values; the objective is `0.5 |r|^2`.
    pub fn least_squares(
        n: usize,
        f: impl Fn(&DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> + Sync + 'static,
    ) -> Self {
        FnProblem {
            n,
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            body: Body::Residuals(Box::new(f)),
        }
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }
}

impl NlpProblem for FnProblem {
    fn dim(&self) -> usize {
        self.n
    }
    fn lower(&self) -> DVector<f64> {
        self.lower.clone()
    }
    fn upper(&self) -> DVector<f64> {
        self.upper.clone()
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<Evaluation> {
        match &self.body {
            Body::Objective(f) => {
                let (objective, constraints) = f(x)?;
                Ok(Evaluation { objective, constraints, residuals: None })
            }
            Body::Residuals(f) => {
                let (r, constraints) = f(x)?;
                Ok(Evaluation { objective: 0.5 * r.norm_squared(), constraints, residuals: Some(r) })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NlpOptions {
    pub tol_stat: f64,
    pub tol_feas: f64,
    pub max_iters: usize,
    pub fd: FdScheme,
    /// Initial infinity-norm step limit.
    pub initial_trust: f64,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions { tol_stat: 1e-6, tol_feas: 1e-8, max_iters: 200, fd: FdScheme::Forward, initial_trust: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NlpStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Infinity norm of the Lagrangian gradient.
    pub stationarity: f64,
    /// Largest constraint or bound violation.
    pub violation: f64,
    /// Largest |multiplier * slack| product.
    pub complementarity: f64,
    /// Most negative multiplier, as a positive number.
    pub dual_infeasibility: f64,
}

impl KktReport {
    pub fn residual(&self) -> f64 {
        self.stationarity.max(self.violation).max(self.complementarity).max(self.dual_infeasibility)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub constraints: DVector<f64>,
    /// Multipliers of `g(x) <= 0`.
    pub multipliers: DVector<f64>,
    pub lower_multipliers: DVector<f64>,
    pub upper_multipliers: DVector<f64>,
    pub kkt: KktReport,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: NlpStatus,
}

/// KKT measures of a point given its derivatives and multipliers.
#[allow(clippy::too_many_arguments)]
pub fn kkt_report(
    x: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    g: &DVector<f64>,
    gradient: &DVector<f64>,
    jacobian: &DMatrix<f64>,
    lambda: &DVector<f64>,
    mu_lower: &DVector<f64>,
    mu_upper: &DVector<f64>,
) -> KktReport {
    let lagr = gradient + jacobian.transpose() * lambda - mu_lower + mu_upper;
    let mut r = KktReport { stationarity: lagr.amax(), ..Default::default() };
    for i in 0..g.len() {
        r.violation = r.violation.max(g[i]);
        r.complementarity = r.complementarity.max((lambda[i] * g[i]).abs());
        r.dual_infeasibility = r.dual_infeasibility.max(-lambda[i]);
    }
    for j in 0..x.len() {
        r.violation = r.violation.max(lower[j] - x[j]).max(x[j] - upper[j]);
        if lower[j].is_finite() {
            r.complementarity = r.complementarity.max((mu_lower[j] * (x[j] - lower[j])).abs());
        }
        if upper[j].is_finite() {
            r.complementarity = r.complementarity.max((mu_upper[j] * (upper[j] - x[j])).abs());
        }
        r.dual_infeasibility = r.dual_infeasibility.max(-mu_lower[j]).max(-mu_upper[j]);
    }
    r
}

/// Recompute the KKT measures of a returned solution from its multipliers.
pub fn recompute_kkt<P: NlpProblem + ?Sized>(problem: &P, sol: &NlpSolution, scheme: FdScheme) -> Result<KktReport> {
    let at = problem.evaluate(&sol.x)?;
    let d = gather_derivatives(problem, &sol.x, &at, scheme)?;
    Ok(kkt_report(
        &sol.x,
        &problem.lower(),
        &problem.upper(),
        &at.constraints,
        &d.gradient,
        &d.jacobian,
        &sol.multipliers,
        &sol.lower_multipliers,
        &sol.upper_multipliers,
    ))
}

fn gather_derivatives<P: NlpProblem + ?Sized>(problem: &P, x: &DVector<f64>, at: &Evaluation, scheme: FdScheme) -> Result<Derivatives> {
    let mut d = match problem.derivatives(x, at) {
        Some(d) => d?,
        None => fd::derivatives(problem, x, at, scheme)?,
    };
    // Least-squares objectives use J'r, which is as accurate as the residual Jacobian.
    if let (Some(r), Some(jr)) = (&at.residuals, &d.residual_jacobian) {
        d.gradient = jr.transpose() * r;
    }
    Ok(d)
}

fn violation(g: &DVector<f64>) -> f64 {
    g.iter().map(|v| v.max(0.0)).sum()
}

struct QpStep {
    d: DVector<f64>,
    elastic: f64,
    lambda: DVector<f64>,
    mu_lower: DVector<f64>,
    mu_upper: DVector<f64>,
    /// True when a trust-region row (not a true bound) is active.
    trust_active: bool,
}

#[allow(clippy::too_many_arguments)]
fn solve_qp_model(
    hess: &DMatrix<f64>,
    grad: &DVector<f64>,
    g: &DVector<f64>,
    jac: &DMatrix<f64>,
    x: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    trust: f64,
    rho: f64,
    reg: f64,
) -> Result<QpStep> {
    let n = x.len();
    let m = g.len();
    let nv = n + 1;
    // Row layout: constraints, elastic sign, upper rows, lower rows.
    let mut amat = Vec::new();
    let mut bvec = Vec::new();
    for i in 0..m {
        for j in 0..n {
            amat.push(jac[(i, j)]);
        }
        amat.push(-1.0);
        bvec.push(-g[i]);
    }
    let mut row = vec![0.0; nv];
    row[n] = -1.0;
    amat.extend_from_slice(&row);
    bvec.push(0.0);
    let mut upper_rows = Vec::with_capacity(n);
    let mut lower_rows = Vec::with_capacity(n);
    for j in 0..n {
        let room = (upper[j] - x[j]).max(0.0);
        let is_bound = room <= trust;
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        upper_rows.push((bvec.len(), is_bound));
        amat.extend_from_slice(&row);
        bvec.push(room.min(trust));
    }
    for j in 0..n {
        let room = (x[j] - lower[j]).max(0.0);
        let is_bound = room <= trust;
        let mut row = vec![0.0; nv];
        row[j] = -1.0;
        lower_rows.push((bvec.len(), is_bound));
        amat.extend_from_slice(&row);
        bvec.push(room.min(trust));
    }

    // The objective is scaled to unit curvature; multipliers are scaled back.
    let sigma = hess.diagonal().amax().max(1.0);
    let mut q = vec![0.0; nv * nv];
    for i in 0..n {
        for j in 0..n {
            q[i * nv + j] = hess[(i, j)] / sigma;
        }
        q[i * nv + i] += reg;
    }
    q[n * nv + n] = 1e-6 * (1.0 + rho / sigma);
    let mut c: Vec<f64> = grad.iter().map(|v| v / sigma).collect();
    c.push(rho / sigma);

    let mut sol = quadprog::solve_qp(&mut q, &c, &amat, &bvec, 0, false)
        .map_err(|e| Error::Solver(format!("QP subproblem: {e}")))?;
    sol.lagr.iter_mut().for_each(|l| *l *= sigma);
    let d = DVector::from_fn(n, |j, _| sol.sol[j]);
    let lambda = DVector::from_fn(m, |i, _| sol.lagr[i]);
    let mut mu_upper = DVector::zeros(n);
    let mut mu_lower = DVector::zeros(n);
    let mut trust_active = false;
    for j in 0..n {
        let (ru, bu) = upper_rows[j];
        let (rl, bl) = lower_rows[j];
        let (lu, ll) = (sol.lagr[ru], sol.lagr[rl]);
        if bu {
            mu_upper[j] = lu;
        } else if lu > 0.0 {
            trust_active = true;
        }
        if bl {
            mu_lower[j] = ll;
        } else if ll > 0.0 {
            trust_active = true;
        }
    }
    Ok(QpStep { d, elastic: sol.sol[n].max(0.0), lambda, mu_lower, mu_upper, trust_active })
}

fn damped_bfgs(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if sbs <= 1e-16 {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if sr <= 1e-16 {
        return;
    }
    *b -= &bs * bs.transpose() / sbs;
    *b += &r * r.transpose() / sr;
}

/// Solve from the initial guess `x0` (clipped into the bounds).
pub fn solve_nlp<P: NlpProblem + ?Sized>(problem: &P, x0: &DVector<f64>, opts: &NlpOptions) -> Result<NlpSolution> {
    let n = problem.dim();
    let lower = problem.lower();
    let upper = problem.upper();
    if x0.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::invalid("nlp", "dimension mismatch"));
    }
    if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
        return Err(Error::invalid("nlp", "lower bound above upper bound"));
    }
    let mut x = DVector::from_fn(n, |j, _| x0[j].clamp(lower[j], upper[j]));
    let wrap = |iter: usize| move |e: Error| Error::Evaluation { iter, source: Box::new(e) };
    let mut at = problem.evaluate(&x).map_err(wrap(0))?;
    if !at.objective.is_finite() {
        return Err(Error::Evaluation { iter: 0, source: Box::new(Error::NonFinite) });
    }
    let m = at.constraints.len();

    let mut bfgs = DMatrix::<f64>::identity(n, n);
    let mut gn_reg = 1e-8;
    let mut trust = opts.initial_trust;
    let mut nu: f64 = 1.0;
    let mut lambda = DVector::zeros(m);
    let mut mu_lower = DVector::zeros(n);
    let mut mu_upper = DVector::zeros(n);
    let mut prev: Option<(DVector<f64>, DVector<f64>, DMatrix<f64>)> = None;
    let mut failures = 0;
    let mut status = NlpStatus::MaxIters;
    let mut kkt = KktReport::default();
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let der = gather_derivatives(problem, &x, &at, opts.fd).map_err(wrap(iter))?;

        if let Some((s, grad_prev, jac_prev)) = prev.take() {
            let y = (&der.gradient + der.jacobian.transpose() * &lambda) - (grad_prev + jac_prev.transpose() * &lambda);
            damped_bfgs(&mut bfgs, &s, &y);
        }

        let hess = match &der.residual_jacobian {
            Some(jr) => {
                let mut h = jr.transpose() * jr;
                let scale = h.diagonal().amax().max(1e-12);
                for j in 0..n {
                    h[(j, j)] += gn_reg * scale + 1e-12;
                }
                h
            }
            None => bfgs.clone(),
        };

        let rho = (100.0 * nu).max(1e3);
        // Ill-conditioned subproblems are retried with growing regularization.
        let mut attempt = solve_qp_model(&hess, &der.gradient, &at.constraints, &der.jacobian, &x, &lower, &upper, trust, rho, 0.0);
        for reg in [1e-8, 1e-5, 1e-2] {
            if attempt.is_ok() {
                break;
            }
            attempt = solve_qp_model(&hess, &der.gradient, &at.constraints, &der.jacobian, &x, &lower, &upper, trust, rho, reg);
        }
        let qp = attempt.map_err(wrap(iter))?;

        kkt = kkt_report(&x, &lower, &upper, &at.constraints, &der.gradient, &der.jacobian, &qp.lambda, &qp.mu_lower, &qp.mu_upper);
        lambda = qp.lambda.clone();
        mu_lower = qp.mu_lower.clone();
        mu_upper = qp.mu_upper.clone();

        if !qp.trust_active && kkt.violation <= opts.tol_feas && kkt.stationarity <= opts.tol_stat
            && kkt.complementarity <= opts.tol_stat.max(opts.tol_feas)
        {
            status = NlpStatus::Optimal;
            break;
        }
        let dnorm = qp.d.amax();
        if kkt.violation > opts.tol_feas && qp.elastic > opts.tol_feas && dnorm <= 1e-12 * (1.0 + x.amax()) {
            status = NlpStatus::Infeasible;
            break;
        }

        nu = nu.max(1.1 * lambda.amax()).max(1e-6);
        let viol0 = violation(&at.constraints);
        let phi0 = at.objective + nu * viol0;
        let model_viol = violation(&(&at.constraints + &der.jacobian * &qp.d));
        let slope = der.gradient.dot(&qp.d) + nu * (model_viol - viol0);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt = DVector::from_fn(n, |j, _| (x[j] + alpha * qp.d[j]).clamp(lower[j], upper[j]));
            if let Ok(ev) = problem.evaluate(&xt) {
                let phi = ev.objective + nu * violation(&ev.constraints);
                let target = if slope < 0.0 { phi0 + 1e-4 * alpha * slope } else { phi0 - 1e-12 * phi0.abs() };
                if phi.is_finite() && phi <= target {
                    accepted = Some((xt, ev));
                    break;
                }
            }
            alpha *= 0.5;
        }

        match accepted {
            Some((xt, ev)) => {
                failures = 0;
                let s = &xt - &x;
                prev = Some((s.clone(), der.gradient.clone(), der.jacobian.clone()));
                if alpha >= 1.0 && qp.trust_active {
                    trust *= 2.0;
                } else if alpha < 0.25 {
                    trust = (trust * 0.5).max(1e-8);
                }
                if der.residual_jacobian.is_some() {
                    gn_reg = (gn_reg * 0.3).max(1e-10);
                }
                x = xt;
                at = ev;
            }
            None => {
                failures += 1;
                bfgs = DMatrix::identity(n, n);
                gn_reg = (gn_reg * 100.0).min(1e4);
                trust = (trust * 0.1).max(1e-8);
                if failures >= 4 {
                    break;
                }
            }
        }
    }

    // Final measures at the returned point with the latest multipliers.
    if status != NlpStatus::Optimal {
        let der = gather_derivatives(problem, &x, &at, opts.fd).map_err(wrap(iterations))?;
        kkt = kkt_report(&x, &lower, &upper, &at.constraints, &der.gradient, &der.jacobian, &lambda, &mu_lower, &mu_upper);
        if status == NlpStatus::MaxIters && kkt.violation <= opts.tol_feas && kkt.stationarity <= opts.tol_stat {
            status = NlpStatus::Optimal;
        }
    }
    Ok(NlpSolution {
        kkt_residual: kkt.residual(),
        objective: at.objective,
        constraints: at.constraints,
        x,
        multipliers: lambda,
        lower_multipliers: mu_lower,
        upper_multipliers: mu_upper,
        kkt,
        iterations,
        status,
    })
}
