use std::fmt;

use thiserror::Error;

/// Malformed text input (program files, dataset files, expressions).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct FormatError {
    pub message: String,
    /// 1-based line number, when the error came from a multi-line document.
    pub line: Option<usize>,
}

impl FormatError {
    pub fn new(message: impl Into<String>) -> Self {
        FormatError { message: message.into(), line: None }
    }

    pub fn at_line(line: usize, message: impl Into<String>) -> Self {
        FormatError { message: message.into(), line: Some(line) }
    }
}

/// One problem found while validating a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Every issue found in a config, not only the first.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} config error(s):", self.0.len())?;
        for issue in &self.0 {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset has {got} samples, at least {needed} required")]
    DatasetTooSmall { needed: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Config(#[from] ConfigErrors),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
