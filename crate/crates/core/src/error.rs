use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed cell or structure in an input file, with coordinates when known.
    #[error("parse error in {path}{}: {msg}", location(.row, .col))]
    Parse {
        path: PathBuf,
        row: Option<usize>,
        col: Option<usize>,
        msg: String,
    },

    /// Contract violation on inputs (shape mismatches, bad parameters, empty cohorts).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Numerical failure (divergence, non-finite loss, iteration cap).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

fn location(row: &Option<usize>, col: &Option<usize>) -> String {
    match (row, col) {
        (Some(r), Some(c)) => format!(" (row {r}, column {c})"),
        (Some(r), None) => format!(" (row {r})"),
        _ => String::new(),
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
