use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the recognition pipeline and its supporting tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format for {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("image is {width}x{height}; the minimum supported size is 16x16")]
    ImageTooSmall { width: u32, height: u32 },

    #[error("pixel buffer holds {got} values, expected {width}x{height}")]
    PixelCountMismatch { width: u32, height: u32, got: usize },

    #[error("window {window} does not fit a {width}x{height} image")]
    WindowTooLarge {
        window: usize,
        width: u32,
        height: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient sites: need at least 3 distinct points, got {0}")]
    InsufficientSites(usize),

    #[error("degenerate site set: all sites are collinear")]
    DegenerateSites,

    #[error("degenerate triangle")]
    DegenerateTriangle,

    #[error("zero-length edge has no direction")]
    ZeroLengthEdge,

    #[error("empty triangulation: no triangles to extract features from")]
    EmptyTriangulation,

    #[error("value {0} exceeds the final class boundary {1}")]
    OutOfRange(f64, f64),

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("distance is undefined when both vectors are all zero")]
    BothZero,

    #[error("invalid match weights: {0}")]
    InvalidWeights(String),

    #[error("gallery is empty")]
    EmptyGallery,

    #[error("k = {k} is out of range for a gallery of {gallery} entries")]
    InvalidK { k: usize, gallery: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("JSON error for {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("corpus synthesis failed: {0}")]
    Synthesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
