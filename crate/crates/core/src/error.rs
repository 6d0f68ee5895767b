use thiserror::Error;

/// Errors produced by the core algorithms.
#[derive(Debug, Error)]
pub enum Error {
    /// A ground-truth box lies entirely outside the image.
    #[error("target outside image: box ({x0}, {y0}, {x1}, {y1}) vs {width}x{height} image")]
    TargetOutsideImage {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        height: usize,
        width: usize,
    },

    /// Per-target NoCo generation failed; carries the offending target index.
    #[error("target {index}: {source}")]
    TargetFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Evaluation over a dataset with no ground-truth targets is undefined.
    #[error("no targets to evaluate")]
    NoTargets,

    /// Prediction grids do not line up with assignment grids.
    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// Coarse/fine grid dimensions violate the ceil-matched 2x relation.
    #[error("dimension mismatch: coarse {coarse_rows}x{coarse_cols} cannot upsample to fine {fine_rows}x{fine_cols}")]
    UpsampleMismatch {
        coarse_rows: usize,
        coarse_cols: usize,
        fine_rows: usize,
        fine_cols: usize,
    },

    /// Invalid construction input (dimensions, value ranges, configs).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Raster serialization failure.
    #[error("raster i/o: {0}")]
    RasterIo(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
