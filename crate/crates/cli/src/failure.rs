use std::fmt;

use usageval_core::Error;

/// Command failure, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    /// Bad config, schema or input data: exit 1.
    Validation(String),
    /// A checked property does not hold: exit 2.
    Violation(String),
    /// A solve failed: exit 3.
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Violation(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    pub fn context(self, ctx: &str) -> Self {
        match self {
            Failure::Validation(m) => Failure::Validation(format!("{ctx}: {m}")),
            Failure::Violation(m) => Failure::Violation(format!("{ctx}: {m}")),
            Failure::Solver(m) => Failure::Solver(format!("{ctx}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation error: {m}"),
            Failure::Violation(m) => write!(f, "property violation: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}
