use std::path::PathBuf;

use thiserror::Error;

use crate::qpcore::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("node index {index} out of range for {n} nodes")]
    NodeIndex { index: usize, n: usize },

    #[error("cannot connect {n} nodes with {edges} edges")]
    InfeasibleConnectivity { n: usize, edges: usize },

    #[error("no connected graph after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("negative price {0} makes the agent payoff unbounded")]
    UnboundedPayoff(f64),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("solver finished with status {status:?}")]
    SolverStatus { status: SolveStatus },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("empty feasible grid")]
    EmptyFeasibleGrid,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
