use std::path::PathBuf;

use crate::recovery::LpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("input validation failed: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix is rank deficient (smallest/largest pivot ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("linear system is infeasible (least-squares residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("no solution with at most {r_max} nonzeros")]
    NotFound { r_max: usize },

    #[error("enumeration needs {subsets} subsets, budget is {budget}; use sampled mode")]
    BudgetExceeded { subsets: u128, budget: u128 },

    #[error("LP solver finished with status {0:?}")]
    Solver(LpStatus),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
