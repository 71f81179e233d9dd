use std::path::PathBuf;

/// Errors produced by the analysis and curation pipelines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}x{channels} for {len} samples")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    #[error("expected a {expected}-channel image, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("already grayscale")]
    AlreadyGrayscale,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image too small for tile grid")]
    ImageTooSmall,
    #[error("degenerate image")]
    DegenerateImage,
    #[error("featureless image")]
    FeaturelessImage,
    #[error("insufficient matches ({found} < {required})")]
    InsufficientMatches { found: usize, required: usize },
    #[error("alignment failed ({inliers} inliers < {required})")]
    AlignmentFailed { inliers: usize, required: usize },
    #[error("no note detected")]
    NoNoteDetected,
    #[error("empty mask: {0}")]
    EmptyMask(&'static str),
    #[error("no salient features in reference")]
    NoSalientFeatures,
    #[error("invalid UCDI inputs: {0}")]
    InvalidInputs(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("png encoding: {0}")]
    PngEncode(#[from] png::EncodingError),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage name for errors raised inside the analysis pipeline.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// True for failures that mean the damaged photo could not be registered.
    pub fn is_alignment_failure(&self) -> bool {
        match self {
            Error::FeaturelessImage
            | Error::InsufficientMatches { .. }
            | Error::AlignmentFailed { .. } => true,
            Error::Stage { source, .. } => source.is_alignment_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
