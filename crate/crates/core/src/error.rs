use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shift {shift} leaves the virtual domain")]
    DomainExceeded { shift: f64 },
    #[error("requested rank {requested} exceeds attainable rank {attainable}")]
    RankDeficient { requested: usize, attainable: usize },
    #[error("step failure at t = {t}: {detail}")]
    StepFailure { t: f64, detail: String },
    #[error("degenerate reduced mass matrix at p = {p:?} (smallest singular value {sigma_min:e})")]
    DegenerateMass { p: Vec<f64>, sigma_min: f64 },
    #[error("reduced mass matrix degenerated at t = {t}; restart the reduced model from a fresh projection")]
    RestartRequired { t: f64 },
    #[error("time {t} outside the stored range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepFailure { .. }
                | Error::DegenerateMass { .. }
                | Error::RestartRequired { .. }
                | Error::RankDeficient { .. }
                | Error::DomainExceeded { .. }
        )
    }
}
