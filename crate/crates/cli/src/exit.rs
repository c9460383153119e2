use std::fmt;

use ssa_core::SsaError;

pub const OK: i32 = 0;
pub const USAGE: i32 = 2;
pub const NUMERICAL: i32 = 3;
pub const MISS: i32 = 4;

/// A failed command with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<SsaError> for Failure {
    fn from(e: SsaError) -> Self {
        let code = if e.is_usage_error() { USAGE } else { NUMERICAL };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(e.to_string())
    }
}

pub type CmdResult = Result<i32, Failure>;
