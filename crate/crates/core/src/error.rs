use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("IRS unreachable: no energy covariance charges every IRS within the block")]
    IrsUnreachable,
    #[error("WD {wd} cannot power circuit: harvested {harvested:.3e} J < required {required:.3e} J")]
    CircuitPower {
        wd: usize,
        harvested: f64,
        required: f64,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("subsolver failure: {0}")]
    Numerical(String),
    #[error("every tau2 grid point was infeasible: {}", .0.join("; "))]
    NoFeasibleGridPoint(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the problem instance rather than bad input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::IrsUnreachable
                | Error::CircuitPower { .. }
                | Error::Infeasible(_)
                | Error::NoFeasibleGridPoint(_)
        )
    }
}
