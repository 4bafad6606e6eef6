use thiserror::Error;

use crate::graph::TdViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unbalanced demand: demands sum to {0}")]
    UnbalancedDemand(i64),

    #[error("invalid tree decomposition: {0}")]
    InvalidTreeDecomposition(#[from] TdViolation),

    #[error("nonpositive weight {weight} on edge {edge}")]
    NonpositiveWeight { edge: usize, weight: f64 },

    #[error("singular pivot block during elimination")]
    Singular,

    #[error("right-hand side has mass {mass:e} on component {component}, not in the range of the Laplacian")]
    NotInRange { component: usize, mass: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("step bound violated: |h|*|v| = {value:e} exceeds beta = {beta:e}")]
    StepBound { value: f64, beta: f64 },

    #[error("call order violated: {0}")]
    PhaseOrder(&'static str),

    #[error("iterate left the interior at coordinate {coord} in step {step}: value {value:e}, bounds [{lower:e}, {upper:e}]")]
    BoundaryContact {
        coord: usize,
        step: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("interior-point solve ended with duality gap {gap:e}, above the rounding threshold {limit}")]
    NotConverged { gap: f64, limit: f64 },

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
