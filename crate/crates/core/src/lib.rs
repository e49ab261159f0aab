//! Fusing an ensemble of word-embedding sets into a single denoised embedding.
//!
//! Embedding trainers are invariant to orthogonal maps of their output space,
//! so independently seeded runs land in arbitrarily rotated spaces and cannot
//! be averaged directly. This crate aligns all sets into one shared space with
//! orthogonal transforms (generalized Procrustes analysis driven entirely by
//! cached d×d cross-correlation matrices, so iteration cost does not grow with
//! the vocabulary) and averages the mapped vectors per word. It also ships the
//! measurement side: pairwise stability MSE, per-word discrepancy binned by
//! corpus frequency, word-similarity/analogy benchmark scoring, and a
//! synthetic ground-truth generator used as the oracle for all of the above.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature is
//! on by default and `parallel` adds rayon-backed loops with deterministic
//! reduction order.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod embedding;
pub mod error;
pub mod eval;
pub mod procrustes;
pub mod stability;
pub mod synth;

mod fmath;
mod matrix;

pub use embedding::{
    AlignedEnsemble, EmbeddingEnsemble, EmbeddingSet, FrequencyTable, NormalizeOutcome, SetMeta,
    align_vocabularies, center_and_normalize,
};
pub use error::Error;
pub use eval::{
    AnalogyDataset, AnalogyItem, EvalResult, Metric, SimilarityDataset, SimilarityItem,
    eval_analogy, eval_similarity, naive_average, spearman,
};
pub use procrustes::{
    CrossCorrelationCache, FusedEmbedding, GpaConfig, OrthogonalTransform, TransformSet,
    alignment_score, compute_cross_correlations, compute_fused, gpa_fit, orthogonal_project,
    procrustes_align, ssea,
};
pub use stability::{
    BinnedCurve, StabilityReport, average_stability, frequency_binned_mse, pairwise_mse,
    per_word_discrepancy,
};
pub use synth::{
    OracleCheck, SynthConfig, SynthVerdict, SyntheticEnsemble, draw_ensemble, generate_ensemble,
    random_orthogonal, recovery_error, run_oracle_checks,
};

pub type Result<T> = core::result::Result<T, Error>;
