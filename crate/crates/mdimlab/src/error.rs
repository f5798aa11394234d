use crate::params::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Validation(ValidationReport),
    #[error("rule evaluation failed at k={k}: {what}")]
    RuleEvaluation { k: usize, what: String },
    #[error("index k={k} is out of range (explicit list has {len} blocks)")]
    OutOfRange { k: usize, len: usize },
    #[error("x={0} lies outside the domain")]
    Domain(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid resolution {delta} is too coarse for eps={eps}; use delta <= {required}")]
    GridTooCoarse { delta: f64, eps: f64, required: f64 },
    #[error("map has no breakpoint oracle; use the sampled matrix builder instead")]
    NoBreakpointOracle,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by the computation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::RuleEvaluation { .. }
                | Error::OutOfRange { .. }
                | Error::Domain(_)
                | Error::InvalidInput(_)
                | Error::GridTooCoarse { .. }
                | Error::NoBreakpointOracle
        )
    }
}
