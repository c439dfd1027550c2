//! Finite-difference derivatives that never step outside the variable bounds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nlp::{Derivatives, Evaluation, NlpProblem};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdScheme {
    Forward,
    Central,
}

fn step_size(scheme: FdScheme, x: f64) -> f64 {
    let base = match scheme {
        FdScheme::Forward => 1.5e-8,
        FdScheme::Central => 6e-6,
    };
    base * x.abs().max(1.0)
}

struct Column {
    gradient: f64,
    constraints: DVector<f64>,
    residuals: Option<DVector<f64>>,
}

/// Derivatives of objective, constraints and residuals with respect to `x`.
pub fn derivatives<P: NlpProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    at: &Evaluation,
    scheme: FdScheme,
) -> Result<Derivatives> {
    let n = x.len();
    let lower = problem.lower();
    let upper = problem.upper();
    let columns: Vec<Result<Column>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = step_size(scheme, x[j]);
            let fits_up = x[j] + h <= upper[j];
            let fits_down = x[j] - h >= lower[j];
            let probe = |delta: f64| {
                let mut xp = x.clone();
                xp[j] += delta;
                problem.evaluate(&xp)
            };
            let diff = |a: &Evaluation, b: &Evaluation, width: f64| Column {
                gradient: (a.objective - b.objective) / width,
                constraints: (&a.constraints - &b.constraints) / width,
                residuals: match (&a.residuals, &b.residuals) {
                    (Some(ra), Some(rb)) => Some((ra - rb) / width),
                    _ => None,
                },
            };
            Ok(match scheme {
                FdScheme::Central if fits_up && fits_down => {
                    let a = probe(h)?;
                    let b = probe(-h)?;
                    diff(&a, &b, 2.0 * h)
                }
                _ if fits_up || !fits_down => {
                    let a = probe(h)?;
                    diff(&a, at, h)
                }
                _ => {
                    let b = probe(-h)?;
                    diff(at, &b, h)
                }
            })
        })
        .collect();

    let m = at.constraints.len();
    let mut gradient = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(m, n);
    let mut residual_jacobian = at.residuals.as_ref().map(|r| DMatrix::zeros(r.len(), n));
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        gradient[j] = col.gradient;
        jacobian.set_column(j, &col.constraints);
        if let (Some(rj), Some(c)) = (residual_jacobian.as_mut(), col.residuals) {
            rj.set_column(j, &c);
        }
    }
    Ok(Derivatives { gradient, jacobian, residual_jacobian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::nlp::FnProblem;

    #[test]
    fn respects_upper_bound() {
        // sqrt is undefined past the bound, so a forward step would fail.
        let p = FnProblem::new(1, |x: &DVector<f64>| {
            assert!(x[0] <= 1.0, "probe left the box");
            Ok((x[0] * x[0], DVector::zeros(0)))
        })
        .with_bounds(DVector::from_element(1, 0.0), DVector::from_element(1, 1.0));
        let x = DVector::from_element(1, 1.0);
        for scheme in [FdScheme::Forward, FdScheme::Central] {
            let at = p.evaluate(&x).unwrap();
            let d = derivatives(&p, &x, &at, scheme).unwrap();
            assert!((d.gradient[0] - 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn central_is_more_accurate() {
        let p = FnProblem::new(2, |x: &DVector<f64>| Ok((x[0].sin() * x[1].exp(), DVector::from_element(1, x[0] * x[1]))));
        let x = DVector::from_row_slice(&[0.4, -0.3]);
        let exact = [0.4f64.cos() * (-0.3f64).exp(), 0.4f64.sin() * (-0.3f64).exp()];
        let at = p.evaluate(&x).unwrap();
        let fwd = derivatives(&p, &x, &at, FdScheme::Forward).unwrap();
        let cen = derivatives(&p, &x, &at, FdScheme::Central).unwrap();
        for (j, e) in exact.iter().enumerate() {
            assert!((fwd.gradient[j] - e).abs() < 1e-6);
            assert!((cen.gradient[j] - e).abs() < 1e-9);
        }
        assert!((cen.jacobian[(0, 0)] + 0.3).abs() < 1e-9);
    }
}
