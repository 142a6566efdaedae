use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent at byte {offset} is not an integer constant")]
    NonIntegerExponent { offset: usize },

    #[error("abs() is not differentiable; it may only appear in envelope expressions")]
    AbsNotDifferentiable,

    #[error("domain error in `{expr}` at x = {x}: {reason}")]
    Domain { expr: String, x: f64, reason: String },

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} within the depth cap")]
    QuadratureNonConvergence { a: f64, b: f64, tol: f64 },

    #[error("constraint matrix is rank deficient (rank {rank} < {rows} constraints)")]
    RankDeficient { rank: usize, rows: usize },

    #[error(
        "infeasible budget{}: best certified error {best:e} > budget {budget:e} (degree cap {degree_cap})",
        stage.map(|k| format!(" at stage {k}")).unwrap_or_default()
    )]
    InfeasibleBudget {
        stage: Option<usize>,
        best: f64,
        budget: f64,
        degree_cap: usize,
    },

    #[error("glued target is discontinuous at stage {k}: mismatch {left:e} at -{edge}, {right:e} at +{edge}", edge = k - 1)]
    GlueDiscontinuity { k: usize, left: f64, right: f64 },

    #[error("envelope is not a positive real number at t = {t}: {value}")]
    NonPositiveEnvelope { t: f64, value: String },

    #[error("stage {k}: glued-target moment {functional} = {glued} differs from target moment {target}")]
    MomentMismatch {
        k: usize,
        functional: String,
        glued: String,
        target: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),
}
