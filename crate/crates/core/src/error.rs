use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular {what}")]
    Singular { what: &'static str },
    #[error("coframe is singular at the sample point (condition number {cond:.3e})")]
    SingularCoframe { cond: f64 },
    #[error("constraint violated: {what} residual {residual:.3e} exceeds {tol:.1e}")]
    Constraint {
        what: &'static str,
        residual: f64,
        tol: f64,
    },
    #[error("almost-symplectic form is degenerate at the point (condition number {cond:.3e})")]
    SingularForm { cond: f64 },
    #[error("coframe is not declared orthonormal")]
    NotOrthonormal,
    #[error("point leaves the chart domain: {0}")]
    ChartExit(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("basis mismatch: {0}")]
    Basis(String),
    #[error("distribution is not Engel: growth vector {0:?}")]
    NotEngel(Vec<usize>),
    #[error("annihilator row {row} is misdeclared: {reason}")]
    Misdeclared { row: usize, reason: String },
    #[error("normalisation impossible: {0}")]
    Normalisation(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Error class used for process exit codes: 2 configuration,
    /// 3 numerical, 4 structural.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Invalid(_) | Error::Json(_) | Error::Io(_) => ErrorClass::Config,
            Error::Singular { .. }
            | Error::SingularCoframe { .. }
            | Error::SingularForm { .. }
            | Error::Constraint { .. }
            | Error::ChartExit(_)
            | Error::Integration { .. } => ErrorClass::Numerical,
            Error::Degree(_)
            | Error::Basis(_)
            | Error::NotEngel(_)
            | Error::Misdeclared { .. }
            | Error::NotOrthonormal
            | Error::Normalisation(_) => ErrorClass::Structural,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Structural,
}

pub type Result<T> = std::result::Result<T, Error>;
