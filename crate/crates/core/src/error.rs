use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("0/0 is not a slope")]
    ZeroSlope,
    #[error("the slope 1/0 has no finite continued fraction")]
    InfiniteSlopeCf,
    #[error("operation requires distinct slopes")]
    EqualSlopes,
    #[error("matrix must have determinant 1, got {0}")]
    InvalidDeterminant(String),
    #[error("marking curves must intersect exactly once")]
    InvalidMarking,
    #[error("twist coordinate is undefined for the core curve itself")]
    DegenerateTwist,
    #[error("normalizer must send the annulus core to 1/0")]
    BadNormalizer,
    #[error("mapping class is not pseudo-Anosov")]
    NotPseudoAnosov,
    #[error("boundary codes are indistinguishable through depth {depth}")]
    IndistinguishableAtDepth { depth: usize },
    #[error("insufficient depth: needed {needed}, available {available}")]
    InsufficientDepth { needed: usize, available: usize },
    #[error("continued fraction is not canonical: {0}")]
    BadContinuedFraction(String),
    #[error("lamination has no terms")]
    EmptyLamination,
    #[error("weights must be positive and sum to 1")]
    BadWeights,
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("duplicate component {0}")]
    DuplicateComponent(String),
    #[error("annulus components carry only oriented endpoints")]
    BadAnnulusPoint,
    #[error("farey components carry slope or continued-fraction codes")]
    BadFareyPoint,
    #[error("times must be strictly increasing")]
    NonMonotoneTimes,
    #[error("envelope values must be non-negative")]
    NegativeValue,
    #[error("sequence is empty")]
    EmptySequence,
    #[error("subsequence indices must be strictly increasing")]
    BadIndices,
    #[error("limit extraction failed: {0}")]
    Extraction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
