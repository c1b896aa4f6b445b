use thiserror::Error;

/// Errors produced by the denoising library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is outside its admissible range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The observations do not cover the index range an operation reads.
    #[error("insufficient coverage: need observations on [{need_lo}, {need_hi}], have [{have_lo}, {have_hi}]")]
    Coverage {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Malformed subspace specification.
    #[error("invalid subspace specification: {0}")]
    InvalidSpec(String),

    /// An oracle construction was requested outside its validity range.
    #[error("{0}")]
    BelowThreshold(String),

    /// The configured constraint radius excludes the oracle filter.
    #[error("oracle filter infeasible: {0}")]
    OracleInfeasible(String),

    /// Malformed CSV input; `line` is 1-based and counts the header.
    #[error("CSV error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by configuration rather than by data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidSpec(_)
                | Error::BelowThreshold(_)
                | Error::OracleInfeasible(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
