use alloc::string::String;

/// Errors produced by validation of inputs to the numeric routines.
///
/// Parsing and I/O errors live in the companion CLI crate; everything here is
/// a property of in-memory data.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("vocabulary intersection is empty")]
    EmptyIntersection,

    #[error("duplicate token {0:?}")]
    DuplicateToken(String),

    #[error("need at least {required} {what}, got {actual}")]
    TooFew {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input has zero rank variance; correlation is undefined")]
    ConstantInput,
}
