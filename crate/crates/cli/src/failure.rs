use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const VERDICT: i32 = 5;
    pub const IO: i32 = 6;
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Verdict(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => exit::VALIDATION,
            Failure::Numerical(_) => exit::NUMERICAL,
            Failure::Verdict(_) => exit::VERDICT,
            Failure::Io(_) => exit::IO,
        }
    }

    pub fn validation(field: &str, reason: impl fmt::Display) -> Self {
        Failure::Validation(format!("{field}: {reason}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Verdict(m) => write!(f, "verdict mismatch: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<slcarma::Error> for Failure {
    fn from(e: slcarma::Error) -> Self {
        use slcarma::Error as E;
        match e {
            E::Validation { .. } | E::Domain(_) | E::Unstable { .. } | E::Json(_) => {
                Failure::Validation(e.to_string())
            }
            E::RootsNotConverged { .. } | E::ExpOverflow(_) | E::Numerical(_) => {
                Failure::Numerical(e.to_string())
            }
            E::Io(_) => Failure::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Failure>;
