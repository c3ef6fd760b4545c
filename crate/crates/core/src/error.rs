use thiserror::Error;

/// Errors produced by the modelling, solving and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("schema violation at row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("inconsistent scenario count: week {week} has {got} scenarios, expected {expected}")]
    InconsistentScenarioCount {
        week: usize,
        expected: usize,
        got: usize,
    },

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error(
        "solver failure (week {week:?}, grid point {grid:?}, scenario {scenario:?}): {message}"
    )]
    Solver {
        week: Option<usize>,
        grid: Option<usize>,
        scenario: Option<usize>,
        message: String,
    },

    #[error("mismatched tables: {0}")]
    MismatchedTables(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn solver(message: impl Into<String>) -> Self {
        Error::Solver {
            week: None,
            grid: None,
            scenario: None,
            message: message.into(),
        }
    }

    /// Attach location context to a solver failure. Other variants pass through.
    pub fn at(self, week: Option<usize>, grid: Option<usize>, scenario: Option<usize>) -> Self {
        match self {
            Error::Solver {
                week: w,
                grid: g,
                scenario: s,
                message,
            } => Error::Solver {
                week: w.or(week),
                grid: g.or(grid),
                scenario: s.or(scenario),
                message,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
