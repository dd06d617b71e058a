use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("image is empty ({width}x{height})")]
    EmptyImage { width: usize, height: usize },

    #[error("buffer of length {len} does not match {width}x{height}")]
    BufferSize {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("dimension mismatch: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("kernel must have odd dimensions, got {width}x{height}")]
    EvenKernel { width: usize, height: usize },

    #[error("window side must be odd and at least 1, got {0}")]
    InvalidWindow(usize),

    #[error("level count must lie in [2, 256], got {0}")]
    InvalidLevels(usize),

    #[error("image contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("pixel value {value} at index {index} is outside [0, {levels})")]
    LevelOutOfRange {
        index: usize,
        value: u8,
        levels: usize,
    },

    #[error("co-occurrence matrix has no transitions (image smaller than 1x2)")]
    NoTransitions,

    #[error("orientation set is empty")]
    EmptyOrientations,

    #[error("beta must lie in [0.5, 1], got {0}")]
    InvalidBeta(f64),

    #[error("vessel thickness must be >= 1 pixel, got {0}")]
    InvalidThickness(f64),

    #[error("invalid CLAHE tile {0}x{1}")]
    InvalidTile(usize, usize),

    #[error("CLAHE clip limit must be finite and >= 1, got {0}")]
    InvalidClip(f64),

    #[error("no positive (vessel) pixels in the evaluated region")]
    NoPositives,

    #[error("no negative (background) pixels in the evaluated region")]
    NoNegatives,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}
