use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the analysis kernels and ingestion layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Input is mathematically degenerate for the requested operation
    /// (e.g. a constant series fed to the mutual-information selector,
    /// or an EVI denominator at zero).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The series is too short for the requested operation.
    #[error("{context}: need at least {needed} samples, got {got}")]
    TooShort {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// An index-based specification does not fit the data.
    #[error("index out of range: {0}")]
    IndexRange(String),

    /// Two inputs that must agree in size do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Structural problem with an input file (bad header, ragged rows, ...).
    #[error("{path}: row {row}: {message}")]
    CsvFormat {
        path: PathBuf,
        row: usize,
        message: String,
    },

    /// A cell failed to parse as a number.
    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a number")]
    CsvParse {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    /// A cell is empty or marked missing and gap filling was not requested.
    #[error("{path}: row {row}, column {column}: missing value (enable fill to interpolate)")]
    MissingValue {
        path: PathBuf,
        row: usize,
        column: usize,
    },

    /// Error attributed to a specific pixel of a stack.
    #[error("pixel {pixel}: {source}")]
    Pixel {
        pixel: String,
        #[source]
        source: Box<Error>,
    },

    /// Inconsistent study configuration (e.g. a joint pair names an
    /// unknown stack).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a pixel id to an error that occurred while processing
    /// one member of a stack.
    pub fn for_pixel(self, pixel: &str) -> Error {
        Error::Pixel {
            pixel: pixel.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
