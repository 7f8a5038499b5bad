//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, NafError>;

/// Everything that can go wrong while training, decoding, or auditing.
#[derive(Debug, Error)]
pub enum NafError {
    /// Every weight passed to normalization was zero. When ensembling, this
    /// means the combined supports are disjoint.
    #[error("all weights are zero (disjoint supports)")]
    AllZeroWeights,

    /// A probability vector failed validation (negative entry or sum off by
    /// more than the tolerance).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The corpus has no documents.
    #[error("corpus is empty")]
    EmptyCorpus,

    /// A model or corpus file does not conform to its format.
    #[error("format error at line {line}: {message}")]
    FormatError { line: usize, message: String },

    /// The requested exact enumeration exceeds the configured cap.
    #[error("enumeration over {support} sequences exceeds cap {cap}")]
    EnumerationTooLarge { support: u128, cap: u64 },

    /// A closed-form protection bound is infinite (TV or squared Hellinger
    /// distance equals one).
    #[error("protection bound is infinite")]
    BoundInfinite,

    /// Rejection sampling gave up after the configured number of attempts.
    #[error("rejection sampling exhausted after {attempts} attempts")]
    RejectionExhausted { attempts: u64 },

    /// No sequence satisfies the acceptance constraints (exact acceptance
    /// probability is zero).
    #[error("acceptance region is empty")]
    EmptyAcceptanceRegion,

    /// An observed probability fell below the declared floor, so the
    /// concentration bound does not apply.
    #[error("observed probability {observed:e} is below the declared floor {alpha:e}")]
    FloorViolated { observed: f64, alpha: f64 },

    /// A document id does not exist in the corpus.
    #[error("unknown document id {0}")]
    UnknownDocId(usize),

    /// A document is too short for the requested prompt/continuation split.
    #[error("document too short: {0}")]
    DocumentTooShort(String),

    /// Both sequences are empty, so normalized distance is undefined.
    #[error("both sequences are empty")]
    BothEmpty,

    /// Two models that must share a vocabulary do not.
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl NafError {
    /// Process exit code for the CLI: 1 for validation errors, 2 for errors
    /// that arise while computing (exhausted samplers, blown caps, violated
    /// floors, disjoint supports).
    pub fn exit_code(&self) -> i32 {
        match self {
            NafError::RejectionExhausted { .. }
            | NafError::EnumerationTooLarge { .. }
            | NafError::FloorViolated { .. }
            | NafError::AllZeroWeights
            | NafError::EmptyAcceptanceRegion
            | NafError::BoundInfinite => 2,
            _ => 1,
        }
    }

    /// Short machine-readable tag used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            NafError::AllZeroWeights => "AllZeroWeights",
            NafError::InvalidDistribution(_) => "InvalidDistribution",
            NafError::InvalidParameter(_) => "InvalidParameter",
            NafError::EmptyCorpus => "EmptyCorpus",
            NafError::FormatError { .. } => "FormatError",
            NafError::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            NafError::BoundInfinite => "BoundInfinite",
            NafError::RejectionExhausted { .. } => "RejectionExhausted",
            NafError::EmptyAcceptanceRegion => "EmptyAcceptanceRegion",
            NafError::FloorViolated { .. } => "FloorViolated",
            NafError::UnknownDocId(_) => "UnknownDocId",
            NafError::DocumentTooShort(_) => "DocumentTooShort",
            NafError::BothEmpty => "BothEmpty",
            NafError::VocabularyMismatch(_) => "VocabularyMismatch",
            NafError::Io(_) => "Io",
        }
    }
}
