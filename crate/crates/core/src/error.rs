use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("projection failed at step {step}: {source}")]
    ProjectionAt {
        step: usize,
        #[source]
        source: GeometryError,
    },
    #[error("budget exhausted in {phase} after {steps} steps (achieved {achieved:e})")]
    Budget {
        phase: String,
        steps: usize,
        achieved: f64,
    },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("certificate failed: {what} measured {measured:e} > bound {bound:e}")]
    Certificate {
        what: String,
        measured: f64,
        bound: f64,
    },
    #[error("no separator: {0}")]
    Separator(String),
    #[error("no witness: {0}")]
    NoWitness(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Hypothesis(_) | Error::NoWitness(_) => 2,
            Error::Certificate { .. } | Error::Separator(_) => 3,
            Error::Budget { .. } => 4,
            Error::Geometry(GeometryError::NonConvergence { .. }) => 4,
            Error::Geometry(GeometryError::InvalidSet(_) | GeometryError::DimensionMismatch { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
