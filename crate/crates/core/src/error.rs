use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid Laplacian: {0}")]
    InvalidLaplacian(String),

    #[error("pole set is empty")]
    EmptyPoleSet,
    #[error("pole {index} is not positive: {value}")]
    NonPositivePole { index: usize, value: f64 },
    #[error("poles {first} and {second} coincide (values {value_a} and {value_b})")]
    RepeatedPole {
        first: usize,
        second: usize,
        value_a: f64,
        value_b: f64,
    },
    #[error("row {row} of the inverse diagonalizer has zero absolute sum")]
    SingularScaling { row: usize },
    #[error("matrices are not inverses of each other (residual {residual:e})")]
    NotInverse { residual: f64 },
    #[error("expected order {expected}, found {found}")]
    WrongOrder { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid integration parameters: {0}")]
    InvalidStep(String),
    #[error("state became non-finite or exceeded 1e12 at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("matrix exponential overflowed")]
    ExpmOverflow,
    #[error("trajectory was simulated with a nonzero disturbance")]
    ForcedTrajectory,
    #[error("trajectory carries no formation measurements")]
    MissingFormationContext,

    #[error("disturbance is not in the image of the Laplacian (residual {residual:e})")]
    NotInImage { residual: f64 },
    #[error("disturbance has no L*w0 representation")]
    MissingW0,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
