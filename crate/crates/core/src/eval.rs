//! Benchmark scoring: Spearman correlation of cosine similarities against
//! human judgments, analogy accuracy via 3CosAdd, and the unaligned
//! averaging baseline.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::Result;
use crate::embedding::{EmbeddingEnsemble, EmbeddingSet};
use crate::error::Error;
use crate::fmath;
use crate::procrustes::FusedEmbedding;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimilarityItem {
    pub word_a: String,
    pub word_b: String,
    pub score: f64,
}

/// Word pairs with human similarity judgments.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    items: Vec<SimilarityItem>,
}

impl SimilarityDataset {
    /// At least two items are required for a correlation to be defined.
    pub fn new(items: Vec<SimilarityItem>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::TooFew {
                what: "similarity items",
                required: 2,
                actual: items.len(),
            });
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[SimilarityItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AnalogyItem {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

/// a : b :: c : d quadruples.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyDataset {
    items: Vec<AnalogyItem>,
}

impl AnalogyDataset {
    /// The four words of every item must be distinct.
    pub fn new(items: Vec<AnalogyItem>) -> Result<Self> {
        for (idx, it) in items.iter().enumerate() {
            let w = [&it.a, &it.b, &it.c, &it.d];
            for p in 0..4 {
                for q in (p + 1)..4 {
                    if w[p] == w[q] {
                        return Err(Error::InvalidArgument(format!(
                            "analogy item {} repeats the word {:?}",
                            idx, w[p]
                        )));
                    }
                }
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[AnalogyItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Spearman,
    Accuracy,
}

/// Benchmark score plus coverage accounting, so numbers stay comparable
/// across methods with different vocabularies.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalResult {
    pub metric: Metric,
    pub value: f64,
    pub evaluated: usize,
    pub skipped_oov: usize,
}

/// Fractional ranks (1-based), ties averaged.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::TooFew {
            what: "values",
            required: 2,
            actual: xs.len(),
        });
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(num / fmath::sqrt(dx * dy))
}

fn lookup(set: &EmbeddingSet, word: &str, lowercase_fallback: bool) -> Option<usize> {
    set.position(word).or_else(|| {
        if lowercase_fallback {
            set.position(&word.to_lowercase())
        } else {
            None
        }
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na > 0.0 && nb > 0.0 {
        dot / fmath::sqrt(na * nb)
    } else {
        0.0
    }
}

/// Spearman correlation between embedding cosine similarities and human
/// judgments over the in-vocabulary pairs; pairs with an OOV word are
/// skipped and counted.
pub fn eval_similarity(
    set: &EmbeddingSet,
    dataset: &SimilarityDataset,
    lowercase_fallback: bool,
) -> Result<EvalResult> {
    let mut cosines = Vec::new();
    let mut human = Vec::new();
    let mut skipped = 0;
    for item in dataset.items() {
        match (
            lookup(set, &item.word_a, lowercase_fallback),
            lookup(set, &item.word_b, lowercase_fallback),
        ) {
            (Some(a), Some(b)) => {
                cosines.push(cosine(set.row(a), set.row(b)));
                human.push(item.score);
            }
            _ => skipped += 1,
        }
    }
    if cosines.len() < 2 {
        return Err(Error::TooFew {
            what: "evaluable pairs",
            required: 2,
            actual: cosines.len(),
        });
    }
    Ok(EvalResult {
        metric: Metric::Spearman,
        value: spearman(&cosines, &human)?,
        evaluated: cosines.len(),
        skipped_oov: skipped,
    })
}

/// Answer one analogy by 3CosAdd: argmax over the vocabulary of
/// cosine(v, b̂ − â + ĉ) on unit-normalized vectors, with the three query
/// words excluded from the candidates. Returns whether the argmax hit `d`.
fn analogy_item_correct(set: &EmbeddingSet, norms: &[f64], idx: [usize; 4]) -> bool {
    let dim = set.dim();
    let [ia, ib, ic, id] = idx;
    let mut query = vec![0.0; dim];
    for (src, sign) in [(ia, -1.0), (ib, 1.0), (ic, 1.0)] {
        let row = set.row(src);
        if norms[src] > 0.0 {
            for (q, v) in query.iter_mut().zip(row) {
                *q += sign * v / norms[src];
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = usize::MAX;
    for (t, row) in set.rows().enumerate() {
        if t == ia || t == ib || t == ic {
            continue;
        }
        if norms[t] == 0.0 {
            continue;
        }
        let dot: f64 = row.iter().zip(&query).map(|(v, q)| v * q).sum();
        let score = dot / norms[t];
        if score > best {
            best = score;
            best_idx = t;
        }
    }
    best_idx == id
}

/// 3CosAdd accuracy over the items whose four words are all in vocabulary;
/// items touching an OOV word are skipped and counted.
pub fn eval_analogy(
    set: &EmbeddingSet,
    dataset: &AnalogyDataset,
    lowercase_fallback: bool,
) -> Result<EvalResult> {
    let norms: Vec<f64> = set
        .rows()
        .map(|r| fmath::sqrt(r.iter().map(|v| v * v).sum()))
        .collect();

    let resolved: Vec<Option<[usize; 4]>> = dataset
        .items()
        .iter()
        .map(|item| {
            Some([
                lookup(set, &item.a, lowercase_fallback)?,
                lookup(set, &item.b, lowercase_fallback)?,
                lookup(set, &item.c, lowercase_fallback)?,
                lookup(set, &item.d, lowercase_fallback)?,
            ])
        })
        .collect();

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Option<bool>> = resolved
        .par_iter()
        .map(|idx| idx.map(|idx| analogy_item_correct(set, &norms, idx)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Option<bool>> = resolved
        .iter()
        .map(|idx| idx.map(|idx| analogy_item_correct(set, &norms, idx)))
        .collect();

    let evaluated = outcomes.iter().filter(|o| o.is_some()).count();
    if evaluated == 0 {
        return Err(Error::TooFew {
            what: "evaluable analogy items",
            required: 1,
            actual: 0,
        });
    }
    let correct = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(EvalResult {
        metric: Metric::Accuracy,
        value: correct as f64 / evaluated as f64,
        evaluated,
        skipped_oov: dataset.len() - evaluated,
    })
}

/// Per-word mean across sets with no alignment: y_t = (1/k) Σ_i x_{i,t}.
/// Identical to fusing with identity transforms; the weak baseline.
pub fn naive_average(ensemble: &EmbeddingEnsemble) -> FusedEmbedding {
    let (n, d, k) = (ensemble.len(), ensemble.dim(), ensemble.k());
    let mut data = vec![0.0; n * d];
    for t in 0..n {
        let out = &mut data[t * d..(t + 1) * d];
        for i in 0..k {
            for (o, v) in out.iter_mut().zip(ensemble.set(i).row(t)) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= k as f64;
        }
    }
    let mut set =
        EmbeddingSet::new(ensemble.words().to_vec(), data, d).expect("ensemble rows are valid");
    set.meta.label = Some("naive-average".into());
    FusedEmbedding::from_set(set)
}
