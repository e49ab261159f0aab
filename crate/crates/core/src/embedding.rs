//! In-memory embedding sets, ensembles over a shared vocabulary, and the
//! centering/normalization preprocessing applied before and after fusion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::Result;
use crate::error::Error;
use crate::fmath;

/// Provenance and preprocessing flags carried alongside an embedding set.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct SetMeta {
    pub label: Option<String>,
    pub centered: bool,
    pub normalized: bool,
}

/// One trained embedding instance: an ordered vocabulary and an n×d matrix,
/// row t holding the vector of word t. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    data: Vec<f64>,
    dim: usize,
    pub meta: SetMeta,
}

impl EmbeddingSet {
    /// Build a set from an ordered word list and a row-major n×d buffer.
    ///
    /// Rejects duplicate tokens, a row/word count mismatch, d = 0 and
    /// non-finite entries.
    pub fn new(words: Vec<String>, data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if data.len() != words.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} words with d={} need {} values, got {}",
                words.len(),
                dim,
                words.len() * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "embedding values must be finite".into(),
            ));
        }
        let mut index = BTreeMap::new();
        for (t, w) in words.iter().enumerate() {
            if index.insert(w.clone(), t).is_some() {
                return Err(Error::DuplicateToken(w.clone()));
            }
        }
        Ok(Self {
            words,
            index,
            data,
            dim,
            meta: SetMeta::default(),
        })
    }

    /// Number of words (rows).
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row index of `word`, if present.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major backing buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = Some(label.into());
        self
    }

    /// Same tokens in the same order.
    pub fn same_vocabulary(&self, other: &EmbeddingSet) -> bool {
        self.words == other.words
    }
}

/// Result of [`center_and_normalize`]: the transformed set plus the indices
/// of rows that centered to (numerical) zero and were left as zero vectors.
#[derive(Debug, Clone)]
pub struct NormalizeOutcome {
    pub set: EmbeddingSet,
    pub zero_rows: Vec<usize>,
}

/// Subtract the per-dimension mean over all words, then scale every row to
/// unit L2 norm. Rows whose centered norm is indistinguishable from
/// cancellation noise stay zero and are reported instead of being rescaled.
pub fn center_and_normalize(set: &EmbeddingSet) -> NormalizeOutcome {
    let n = set.len();
    let d = set.dim();
    let mut data = set.data.clone();

    if n > 0 {
        let mut means = alloc::vec![0.0; d];
        for row in data.chunks_exact(d) {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n as f64;
        }
        for row in data.chunks_exact_mut(d) {
            for (v, m) in row.iter_mut().zip(&means) {
                *v -= m;
            }
        }
    }

    let norms: Vec<f64> = data
        .chunks_exact(d)
        .map(|row| fmath::sqrt(row.iter().map(|v| v * v).sum()))
        .collect();
    let max_norm = norms.iter().fold(0.0_f64, |a, &b| a.max(b));
    // Rows at or below this are artifacts of the mean subtraction, not data.
    let zero_cutoff = max_norm * 1e-12;

    let mut zero_rows = Vec::new();
    for (t, row) in data.chunks_exact_mut(d).enumerate() {
        if norms[t] <= zero_cutoff {
            row.fill(0.0);
            zero_rows.push(t);
        } else {
            for v in row.iter_mut() {
                *v /= norms[t];
            }
        }
    }

    let mut out = EmbeddingSet {
        words: set.words.clone(),
        index: set.index.clone(),
        data,
        dim: d,
        meta: set.meta.clone(),
    };
    out.meta.centered = true;
    out.meta.normalized = true;
    NormalizeOutcome {
        set: out,
        zero_rows,
    }
}

/// k embedding sets over one shared vocabulary (same tokens, same order,
/// same dimension); the input of the alignment pipeline.
#[derive(Debug, Clone)]
pub struct EmbeddingEnsemble {
    sets: Vec<EmbeddingSet>,
}

impl EmbeddingEnsemble {
    pub fn new(sets: Vec<EmbeddingSet>) -> Result<Self> {
        if sets.len() < 2 {
            return Err(Error::TooFew {
                what: "embedding sets",
                required: 2,
                actual: sets.len(),
            });
        }
        let first = &sets[0];
        for (i, s) in sets.iter().enumerate().skip(1) {
            if s.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: s.dim(),
                });
            }
            if !s.same_vocabulary(first) {
                return Err(Error::VocabularyMismatch(format!(
                    "set {} does not share the vocabulary of set 0",
                    i
                )));
            }
        }
        Ok(Self { sets })
    }

    /// Number of sets k.
    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Shared vocabulary size n.
    pub fn len(&self) -> usize {
        self.sets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets[0].is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    pub fn words(&self) -> &[String] {
        self.sets[0].words()
    }

    pub fn sets(&self) -> &[EmbeddingSet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &EmbeddingSet {
        &self.sets[i]
    }

    pub fn into_sets(self) -> Vec<EmbeddingSet> {
        self.sets
    }
}

/// Ensemble over the vocabulary intersection plus how many words each input
/// set lost to the intersection.
#[derive(Debug, Clone)]
pub struct AlignedEnsemble {
    pub ensemble: EmbeddingEnsemble,
    /// `dropped[i]` = words of input set i absent from the intersection.
    pub dropped: Vec<usize>,
}

/// Restrict all sets to their common vocabulary, ordered by the first set's
/// word order, and report the number of dropped words per set.
pub fn align_vocabularies(sets: &[EmbeddingSet]) -> Result<AlignedEnsemble> {
    if sets.len() < 2 {
        return Err(Error::TooFew {
            what: "embedding sets",
            required: 2,
            actual: sets.len(),
        });
    }
    let d = sets[0].dim();
    for s in sets.iter().skip(1) {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
    }

    let mut shared: BTreeSet<&str> = sets[0].words().iter().map(String::as_str).collect();
    for s in sets.iter().skip(1) {
        let theirs: BTreeSet<&str> = s.words().iter().map(String::as_str).collect();
        shared = shared.intersection(&theirs).copied().collect();
    }
    if shared.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let kept: Vec<&str> = sets[0]
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| shared.contains(w))
        .collect();

    let mut aligned = Vec::with_capacity(sets.len());
    let mut dropped = Vec::with_capacity(sets.len());
    for s in sets {
        let mut data = Vec::with_capacity(kept.len() * d);
        for w in &kept {
            let t = s.position(w).expect("word is in the intersection");
            data.extend_from_slice(s.row(t));
        }
        dropped.push(s.len() - kept.len());
        let mut out = EmbeddingSet::new(kept.iter().map(|w| w.to_string()).collect(), data, d)?;
        out.meta = s.meta.clone();
        aligned.push(out);
    }

    Ok(AlignedEnsemble {
        ensemble: EmbeddingEnsemble::new(aligned)?,
        dropped,
    })
}

/// Corpus occurrence counts per token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: impl Into<String>, count: u64) {
        self.counts.insert(word.into(), count);
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }
}

impl FromIterator<(String, u64)> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = (String, u64)>>(iter: I) -> Self {
        Self {
            counts: iter.into_iter().collect(),
        }
    }
}
