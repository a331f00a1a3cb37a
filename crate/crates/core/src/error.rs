use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the barcode / reconstruction / search pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),
    #[error("image has a zero dimension ({width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("invalid image data: {0}")]
    InvalidImage(String),
    #[error("degenerate target size {rows}x{cols}")]
    DegenerateSize { rows: usize, cols: usize },
    #[error("unknown phantom '{0}' (expected shepp-logan, disk, square or gradient)")]
    UnknownPhantom(String),
    #[error("phantom size {0} is below the minimum of 16")]
    PhantomTooSmall(usize),
    #[error("image must be square, got {width}x{height}")]
    NotSquare { width: usize, height: usize },
    #[error("invalid angle set: {0}")]
    InvalidAngles(String),
    #[error("projection count {0} outside 1..=180")]
    AngleCountOutOfRange(usize),
    #[error("sinogram is empty")]
    EmptySinogram,
    #[error("sinogram bin length {bins} does not match an image side of {side} (expected {expected})")]
    SideMismatch { side: usize, bins: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("barcode shapes differ: {0}")]
    BarcodeMismatch(String),
    #[error("malformed barcode text: {0}")]
    BarcodeParse(String),
    #[error("cannot choose {n} items out of {m}")]
    SubsetTooLarge { n: usize, m: usize },
    #[error("exhaustive search needs {required} evaluations, above the budget cap of {cap}")]
    BudgetExceeded { required: String, cap: u64 },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("no images to process")]
    NoImages,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
