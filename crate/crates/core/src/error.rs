use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rope lengths l1={l1} m, l2={l2} m are inconsistent with anchor distance {d_a} m")]
    Domain { l1: f64, l2: f64, d_a: f64 },

    #[error("position lies on the anchor line, the ropes-plane angle is undefined")]
    OnAnchorLine,

    #[error("model singularity: |sin(psi)| = {0:e} is below the configured threshold")]
    Singularity(f64),

    #[error("state became non-finite")]
    NonFinite,

    #[error("rope force {0} N is positive, ropes can only pull (f <= 0)")]
    PushingRope(f64),

    #[error("propagation failed at knot {knot}: {source}")]
    Rollout {
        knot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("evaluation failed at iteration {iter}: {source}")]
    Evaluation {
        iter: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_knot(self, knot: usize) -> Self {
        Error::Rollout {
            knot,
            source: Box::new(self),
        }
    }
}
