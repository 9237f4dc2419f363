use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid beliefs: {0}")]
    InvalidBeliefs(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("clustering: {0}")]
    Clustering(String),

    #[error("welfare gain undefined: baseline mean payoff is {0}")]
    UndefinedGain(f64),

    #[error("{0}")]
    Parse(ParseErrors),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One offending row in an ingested file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

/// Every problem found while parsing a file, not just the first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseErrors {
    pub source: String,
    pub rows: Vec<RowError>,
}

impl ParseErrors {
    pub fn new(source: impl Into<String>) -> Self {
        Self { source: source.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, line: u64, message: impl Into<String>) {
        self.rows.push(RowError { line, message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.rows.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(self))
        }
    }
}

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} error(s)", self.source, self.rows.len())?;
        for row in &self.rows {
            write!(f, "\n  line {}: {}", row.line, row.message)?;
        }
        Ok(())
    }
}
