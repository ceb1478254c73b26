use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by graph construction, the solver and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate local scale at node {node}: distance to neighbor {m} is zero")]
    DegenerateScale { node: usize, m: usize },

    #[error("degenerate edge ({src}, {dst}): endpoints coincide")]
    DegenerateDistance { src: usize, dst: usize },

    #[error("solver diverged at iteration {iteration}: non-finite values")]
    Divergence { iteration: usize },

    #[error("infeasible size constraints: {0}")]
    InfeasibleSize(String),

    #[error("instance too large for enumeration: {0}")]
    SizeLimit(String),

    #[error("eigensolver did not converge after {matvecs} operator applications (residual {residual:.3e})")]
    SpectralConvergence { residual: f64, matvecs: usize },

    #[error("cannot sample supervision: {0}")]
    InfeasibleSupervision(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    ///
    /// 1 = configuration, 2 = data, 3 = solver divergence, 4 = infeasible size.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::InvalidConfig(_) => 1,
            Error::Divergence { .. } | Error::SpectralConvergence { .. } => 3,
            Error::InfeasibleSize(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
