//! Small dense solvers: a sequential quadratic programming method for smooth
//! bound and inequality constrained problems and a simplex LP solver.

pub mod fd;
pub mod lp;
pub mod nlp;

pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus};
pub use nlp::{solve_nlp, Derivatives, Evaluation, FnProblem, KktReport, NlpOptions, NlpProblem, NlpSolution, NlpStatus};
