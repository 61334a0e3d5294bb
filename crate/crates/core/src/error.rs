use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two fields were combined that do not share a grid or y-envelope.
    #[error("grid mismatch: fields must share sampling and y0")]
    GridMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index ({i}, {j}) out of range for {n_u}x{n_w} grid")]
    OutOfRange {
        i: usize,
        j: usize,
        n_u: usize,
        n_w: usize,
    },

    #[error("visibility undefined: p_max + p_min must be positive (got {p_max}, {p_min})")]
    UndefinedVisibility { p_max: f64, p_min: f64 },

    #[error("unsupported field dump version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("field data size mismatch: header implies {expected} bytes, file has {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("column length mismatch: '{name}' has {found} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
