//! Consistency measurement between embedding instances: pairwise MSE after
//! optimal orthogonal alignment, sampled-pair stability summaries, and the
//! per-word discrepancy curve binned by corpus frequency.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::Result;
use crate::embedding::{EmbeddingSet, FrequencyTable};
use crate::error::Error;
use crate::procrustes::procrustes_align;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Mean ± standard deviation of the pairwise alignment MSE over sampled
/// instance pairs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityReport {
    pub mean_mse: f64,
    pub std_mse: f64,
    pub num_pairs: usize,
    pub per_pair_mse: Vec<f64>,
    /// Instance index pairs that were scored, in evaluation order.
    pub sampled_pairs: Vec<(usize, usize)>,
    pub seed: u64,
    /// The ± above is the population standard deviation over the sampled
    /// pairs.
    pub std_definition: &'static str,
}

/// One point per populated frequency bin: lower count bound of the bin, mean
/// discrepancy of its words, and how many words it holds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BinPoint {
    pub bin_lower: u64,
    pub mean_mse: f64,
    pub word_count: usize,
}

/// Per-word discrepancy averaged within count bins of a fixed width.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BinnedCurve {
    pub bin_width: u64,
    pub points: Vec<BinPoint>,
    /// Vocabulary words absent from the frequency table, excluded from the
    /// curve.
    pub skipped_missing: usize,
}

fn check_pair(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if !a.same_vocabulary(b) {
        return Err(Error::VocabularyMismatch(String::from(
            "stability comparison needs identical vocabularies in identical order",
        )));
    }
    Ok(())
}

/// Squared residual ‖Q·a_t − b_t‖² per word, with Q the closed-form optimal
/// alignment of `a` onto `b`.
pub fn per_word_discrepancy(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let q = procrustes_align(a, b)?;
    let d = a.dim();
    let mut mapped = alloc::vec![0.0; d];
    Ok(a.rows()
        .zip(b.rows())
        .map(|(ra, rb)| {
            q.apply_into(ra, &mut mapped);
            mapped
                .iter()
                .zip(rb)
                .map(|(m, v)| {
                    let r = m - v;
                    r * r
                })
                .sum()
        })
        .collect())
}

/// Mean over words of the per-word discrepancy: the stability MSE between
/// two instances of the same embedding method.
pub fn pairwise_mse(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<f64> {
    let disc = per_word_discrepancy(a, b)?;
    Ok(disc.iter().sum::<f64>() / disc.len() as f64)
}

/// Score `num_pairs` distinct unordered instance pairs, sampled uniformly
/// without replacement (all pairs when fewer exist), and summarize.
pub fn average_stability(
    instances: &[EmbeddingSet],
    num_pairs: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if instances.len() < 2 {
        return Err(Error::TooFew {
            what: "embedding instances",
            required: 2,
            actual: instances.len(),
        });
    }
    if num_pairs < 1 {
        return Err(Error::InvalidArgument("num_pairs must be >= 1".into()));
    }

    let m = instances.len();
    let mut pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    if num_pairs < pairs.len() {
        // Partial Fisher-Yates: the first num_pairs slots end up as a uniform
        // sample without replacement.
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let total = pairs.len();
        for idx in 0..num_pairs {
            let swap_with = rng.random_range(idx..total);
            pairs.swap(idx, swap_with);
        }
        pairs.truncate(num_pairs);
    }

    #[cfg(feature = "parallel")]
    let per_pair: Result<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| pairwise_mse(&instances[i], &instances[j]))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_pair: Result<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| pairwise_mse(&instances[i], &instances[j]))
        .collect();
    let per_pair = per_pair?;

    let n = per_pair.len() as f64;
    let mean = per_pair.iter().sum::<f64>() / n;
    let var = per_pair
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;

    Ok(StabilityReport {
        mean_mse: mean,
        std_mse: crate::fmath::sqrt(var),
        num_pairs: per_pair.len(),
        per_pair_mse: per_pair,
        sampled_pairs: pairs,
        seed,
        std_definition: "population",
    })
}

/// Bin per-word discrepancies by floor(count / bin_width). Words missing from
/// the frequency table are excluded and counted; empty bins are omitted.
pub fn frequency_binned_mse(
    discrepancy: &[f64],
    freqs: &FrequencyTable,
    vocab: &[String],
    bin_width: u64,
) -> Result<BinnedCurve> {
    if bin_width == 0 {
        return Err(Error::InvalidArgument("bin_width must be >= 1".into()));
    }
    if discrepancy.len() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} discrepancies for {} words",
            discrepancy.len(),
            vocab.len()
        )));
    }

    let mut bins: alloc::collections::BTreeMap<u64, (f64, usize)> =
        alloc::collections::BTreeMap::new();
    let mut skipped_missing = 0;
    for (word, &disc) in vocab.iter().zip(discrepancy) {
        match freqs.get(word) {
            Some(count) => {
                let e = bins.entry(count / bin_width).or_insert((0.0, 0));
                e.0 += disc;
                e.1 += 1;
            }
            None => skipped_missing += 1,
        }
    }

    Ok(BinnedCurve {
        bin_width,
        points: bins
            .into_iter()
            .map(|(bin, (sum, count))| BinPoint {
                bin_lower: bin * bin_width,
                mean_mse: sum / count as f64,
                word_count: count,
            })
            .collect(),
        skipped_missing,
    })
}
