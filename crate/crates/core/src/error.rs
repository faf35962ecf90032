use thiserror::Error;

/// Errors produced by the Lambda-Field library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({x}, {y}) lies outside the grid")]
    OutsideGrid { x: f64, y: f64 },

    #[error("cell ({col}, {row}) is outside a {n_cols}x{n_rows} grid")]
    CellOutOfBounds {
        col: usize,
        row: usize,
        n_cols: usize,
        n_rows: usize,
    },

    #[error("count {count} is outside [0, {total}]")]
    CountOutOfRange { count: f64, total: f64 },

    #[error("integrated intensity must be nonnegative, got {0}")]
    NegativeIntensity(f64),

    #[error("crossed area {area} is outside [0, {total}]")]
    AreaOutOfRange { area: f64, total: f64 },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
