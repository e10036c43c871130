use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree vector: {0}")]
    InvalidDegree(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("axis {axis} out of range for dimension {dim}")]
    Axis { axis: usize, dim: usize },

    #[error("image of lattice point {index} lies outside the unit box: {point:?}")]
    OutOfBox { index: usize, point: Vec<f64> },

    #[error("predicted state left the unit box at step {step}: {state:?}")]
    Escape { step: usize, state: Vec<f64> },

    #[error("trajectory from {start:?} left the native box {bounds:?} before t = {horizon}")]
    FlowEscape {
        start: Vec<f64>,
        bounds: Vec<(f64, f64)>,
        horizon: f64,
    },

    #[error("observable `{0}` has no gradient")]
    MissingGradient(String),

    #[error("map has no derivative Lipschitz constants")]
    MissingDerivativeConstants,

    #[error("lattice assignment failed: {0}")]
    Assignment(String),

    #[error("degenerate image simplex {simplex} (cell {cell:?}): {reason}")]
    DegenerateSimplex {
        simplex: usize,
        cell: Vec<usize>,
        reason: String,
    },

    #[error("point {point:?} lies outside the image hull of the lattice map{}", describe_pair(*.pair))]
    OutOfHull { point: Vec<f64>, pair: Option<usize> },

    #[error("every singular value is below the truncation tolerance {tol:e}")]
    RankZero { tol: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe_pair(pair: Option<usize>) -> String {
    match pair {
        Some(j) => format!(" (data pair {j})"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit code used by the `kb` binary: 2 for configuration and
    /// input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OutOfBox { .. }
            | Error::Escape { .. }
            | Error::FlowEscape { .. }
            | Error::Assignment(_)
            | Error::DegenerateSimplex { .. }
            | Error::OutOfHull { .. }
            | Error::RankZero { .. } => 3,
            _ => 2,
        }
    }
}
