use thiserror::Error;

#[derive(Debug, Error)]
pub enum MattingError {
    #[error("image decode failed: {0}")]
    Decode(String),

    #[error("image encode failed: {0}")]
    Encode(String),

    #[error("expected 3 color channels (optionally with alpha), found {0}")]
    ChannelCount(String),

    #[error("trimap has unequal color channels at pixel ({x}, {y})")]
    TrimapFormat { x: usize, y: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("alpha {value} at index {index} is outside [0, 1]")]
    AlphaOutOfRange { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature vectors have different lengths ({0} vs {1})")]
    FeatureLength(usize, usize),

    #[error("unusable trimap: {0}")]
    UnusableTrimap(String),

    #[error(
        "degenerate sample set: {foreground} foreground and {background} background samples, \
         need at least {required} of each"
    )]
    DegenerateSampleSet {
        foreground: usize,
        background: usize,
        required: usize,
    },

    #[error("image is {width}x{height}, smaller than the {window}x{window} window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MattingError> = std::result::Result<T, E>;
