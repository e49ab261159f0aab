//! Orthogonal alignment of embedding sets into a shared space.
//!
//! Two sets have a closed-form solution ([`procrustes_align`]); k sets are
//! handled by alternating polar-factor updates ([`gpa_fit`]) driven entirely
//! by precomputed d×d cross-correlation matrices, so one sweep costs the same
//! whether the vocabulary has a thousand words or a million. Fusion is the
//! per-word mean of the mapped vectors ([`compute_fused`]).

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::Result;
use crate::embedding::{EmbeddingEnsemble, EmbeddingSet};
use crate::error::Error;
use crate::matrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// An orthogonal d×d map into the shared space. Determinant may be +1 or −1;
/// reflections are legitimate solutions here.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OrthogonalTransform {
    dim: usize,
    /// Row-major d×d entries.
    matrix: Vec<f64>,
}

impl OrthogonalTransform {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: matrix::identity(dim),
        }
    }

    /// Wrap a row-major d×d buffer, checking ‖TᵀT − I‖_F ≤ 1e-10.
    pub fn new(matrix: Vec<f64>, dim: usize) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{} matrix, got {} entries",
                dim,
                dim,
                matrix.len()
            )));
        }
        let defect = matrix::orthogonality_defect(&matrix, dim);
        if defect.is_nan() || defect > ORTHOGONALITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not orthogonal (defect {defect:e})"
            )));
        }
        Ok(Self { dim, matrix })
    }

    fn from_polar(matrix: Vec<f64>, dim: usize) -> Self {
        debug_assert!(matrix::orthogonality_defect(&matrix, dim) <= ORTHOGONALITY_TOL);
        Self { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        matrix::apply(&self.matrix, x, y, self.dim);
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.apply_into(x, &mut y);
        y
    }

    /// ‖TᵀT − I‖_F.
    pub fn orthogonality_defect(&self) -> f64 {
        matrix::orthogonality_defect(&self.matrix, self.dim)
    }

    pub fn transposed(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: matrix::transposed(&self.matrix, self.dim),
        }
    }

    pub fn determinant(&self) -> f64 {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.matrix).determinant()
    }
}

/// Stopping rule for the iterative fit. The reference gives none, so this is
/// a relative score-decrease test with a sweep cap.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GpaConfig {
    pub max_sweeps: usize,
    pub rel_tolerance: f64,
    pub record_history: bool,
}

impl Default for GpaConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 300,
            rel_tolerance: 1e-7,
            record_history: true,
        }
    }
}

impl GpaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps < 1 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        if self.rel_tolerance.is_nan() || self.rel_tolerance <= 0.0 {
            return Err(Error::InvalidArgument("rel_tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Output of [`gpa_fit`]: the per-set transforms plus convergence metadata.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TransformSet {
    pub transforms: Vec<OrthogonalTransform>,
    pub sweeps_run: usize,
    /// Joint score after each sweep (empty if history was not recorded).
    pub score_history: Vec<f64>,
    pub converged: bool,
    pub config: GpaConfig,
}

impl TransformSet {
    pub fn k(&self) -> usize {
        self.transforms.len()
    }

    pub fn dim(&self) -> usize {
        self.transforms[0].dim()
    }

    /// k identity transforms; what the unaligned averaging baseline uses.
    pub fn identities(k: usize, dim: usize) -> Self {
        Self {
            transforms: (0..k).map(|_| OrthogonalTransform::identity(dim)).collect(),
            sweeps_run: 0,
            score_history: Vec::new(),
            converged: true,
            config: GpaConfig::default(),
        }
    }
}

/// All pairwise cross-correlation matrices C_ij = Σ_t x_{j,t} x_{i,t}ᵀ for
/// i < j, plus Σ_t ‖x_{i,t}‖² per set. This is everything the iterative fit
/// needs; the n×d data is never touched again once the cache exists.
#[derive(Debug, Clone)]
pub struct CrossCorrelationCache {
    k: usize,
    d: usize,
    /// Upper triangle in lexicographic (i, j) order, i < j, row-major d×d.
    blocks: Vec<Vec<f64>>,
    gram_traces: Vec<f64>,
}

impl CrossCorrelationCache {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// tr(Σ_t x_{i,t} x_{i,t}ᵀ) per set.
    pub fn gram_traces(&self) -> &[f64] {
        &self.gram_traces
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.k);
        i * self.k - i * (i + 1) / 2 + (j - i - 1)
    }

    /// C_ij for any ordered pair i ≠ j; the lower triangle is materialized by
    /// transposing the stored upper block.
    pub fn block(&self, i: usize, j: usize) -> Cow<'_, [f64]> {
        assert!(i != j && i < self.k && j < self.k);
        if i < j {
            Cow::Borrowed(self.blocks[self.upper_index(i, j)].as_slice())
        } else {
            Cow::Owned(matrix::transposed(
                &self.blocks[self.upper_index(j, i)],
                self.d,
            ))
        }
    }
}

fn cross_block(a: &EmbeddingSet, b: &EmbeddingSet) -> Vec<f64> {
    // C_ab = Σ_t x_{b,t} x_{a,t}ᵀ, accumulated word by word.
    let d = a.dim();
    let mut c = matrix::zeros(d);
    for (xa, xb) in a.rows().zip(b.rows()) {
        for (p, &vb) in xb.iter().enumerate() {
            let crow = &mut c[p * d..(p + 1) * d];
            for (q, &va) in xa.iter().enumerate() {
                crow[q] += vb * va;
            }
        }
    }
    c
}

/// Precompute every C_ij (i < j) and the per-set gram traces.
///
/// Pairs are independent and each pair is accumulated in word order, so the
/// result is identical with and without the `parallel` feature.
pub fn compute_cross_correlations(ensemble: &EmbeddingEnsemble) -> CrossCorrelationCache {
    let k = ensemble.k();
    let d = ensemble.dim();

    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();

    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| cross_block(ensemble.set(i), ensemble.set(j)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| cross_block(ensemble.set(i), ensemble.set(j)))
        .collect();

    let gram_traces = ensemble
        .sets()
        .iter()
        .map(|s| s.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>()).sum())
        .collect();

    CrossCorrelationCache {
        k,
        d,
        blocks,
        gram_traces,
    }
}

/// Maximum allowed ‖TᵀT − I‖_F for anything calling itself orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Nearest orthogonal matrix to a row-major d×d input, via SVD. Invariant
/// under positive scaling of the input.
pub fn orthogonal_project(m: &[f64], dim: usize) -> OrthogonalTransform {
    assert_eq!(
        m.len(),
        dim * dim,
        "expected a {dim}x{dim} row-major matrix"
    );
    OrthogonalTransform::from_polar(matrix::polar_factor(m, dim), dim)
}

/// Closed-form two-set alignment: the orthogonal T minimizing
/// Σ_t ‖T·source_t − target_t‖², i.e. the polar factor of
/// Σ_t target_t source_tᵀ.
pub fn procrustes_align(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
) -> Result<OrthogonalTransform> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: target.dim(),
        });
    }
    if source.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "source has {} rows, target has {}",
            source.len(),
            target.len()
        )));
    }
    if source.is_empty() {
        return Err(Error::TooFew {
            what: "rows",
            required: 1,
            actual: 0,
        });
    }
    let m = cross_block(source, target);
    Ok(orthogonal_project(&m, source.dim()))
}

/// Joint score evaluated from the cache alone:
/// S = Σ_i G_i − (1/k)(Σ_i G_i + 2 Σ_{i<j} tr(T_j C_ij T_iᵀ)).
/// Valid once every transform is orthogonal.
fn score_from_cache(transforms: &[Vec<f64>], cache: &CrossCorrelationCache) -> f64 {
    let (k, d) = (cache.k, cache.d);
    let total_gram: f64 = cache.gram_traces.iter().sum();
    let mut cross = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let b = matrix::matmul(&transforms[j], &cache.blocks[cache.upper_index(i, j)], d);
            cross += matrix::frob_dot(&b, &transforms[i]);
        }
    }
    total_gram - (total_gram + 2.0 * cross) / k as f64
}

/// Iterative multi-set alignment over a prebuilt cache.
///
/// Starts from T_1 = … = T_{k−1} = 0, T_k = I and sweeps i = 1..k in place,
/// setting T_i to the polar factor of Σ_{j≠i} T_j C_ij; each update is the
/// exact minimizer of the joint score over T_i, so the per-sweep score never
/// increases. Stops when the relative score decrease drops below
/// `rel_tolerance`, when the score reaches the floating-point noise floor of
/// the cache formula (exactly alignable inputs drive it to zero, where a
/// relative test cannot fire), or after `max_sweeps`.
pub fn gpa_fit(cache: &CrossCorrelationCache, config: &GpaConfig) -> Result<TransformSet> {
    config.validate()?;
    let (k, d) = (cache.k, cache.d);
    if k < 2 {
        return Err(Error::TooFew {
            what: "embedding sets",
            required: 2,
            actual: k,
        });
    }

    let mut transforms: Vec<Vec<f64>> = (0..k - 1).map(|_| matrix::zeros(d)).collect();
    transforms.push(matrix::identity(d));

    let total_gram: f64 = cache.gram_traces.iter().sum();
    let score_floor = 64.0 * f64::EPSILON * total_gram;

    let mut history = Vec::new();
    let mut prev_score: Option<f64> = None;
    let mut converged = false;
    let mut sweeps_run = 0;

    let mut arg = matrix::zeros(d);
    for _ in 0..config.max_sweeps {
        for i in 0..k {
            arg.fill(0.0);
            for (j, t_j) in transforms.iter().enumerate() {
                if j == i {
                    continue;
                }
                let c_ij = cache.block(i, j);
                matrix::add_matmul(&mut arg, t_j, &c_ij, d);
            }
            transforms[i] = matrix::polar_factor(&arg, d);
        }
        sweeps_run += 1;

        let score = score_from_cache(&transforms, cache);
        if config.record_history {
            history.push(score);
        }
        if score <= score_floor {
            converged = true;
            break;
        }
        if let Some(prev) = prev_score
            && prev - score <= config.rel_tolerance * prev
        {
            converged = true;
            break;
        }
        prev_score = Some(score);
    }

    Ok(TransformSet {
        transforms: transforms
            .into_iter()
            .map(|t| OrthogonalTransform::from_polar(t, d))
            .collect(),
        sweeps_run,
        score_history: history,
        converged,
        config: config.clone(),
    })
}

/// The fused embedding: per word, the mean of the k mapped vectors.
#[derive(Debug, Clone)]
pub struct FusedEmbedding {
    set: EmbeddingSet,
}

impl FusedEmbedding {
    pub(crate) fn from_set(set: EmbeddingSet) -> Self {
        Self { set }
    }

    pub fn as_set(&self) -> &EmbeddingSet {
        &self.set
    }

    pub fn into_set(self) -> EmbeddingSet {
        self.set
    }

    pub fn words(&self) -> &[alloc::string::String] {
        self.set.words()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

impl From<FusedEmbedding> for EmbeddingSet {
    fn from(f: FusedEmbedding) -> Self {
        f.set
    }
}

fn check_transforms(ensemble: &EmbeddingEnsemble, transforms: &TransformSet) -> Result<()> {
    if transforms.k() != ensemble.k() {
        return Err(Error::ShapeMismatch(format!(
            "{} transforms for {} sets",
            transforms.k(),
            ensemble.k()
        )));
    }
    for t in &transforms.transforms {
        if t.dim() != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.dim(),
                actual: t.dim(),
            });
        }
    }
    Ok(())
}

/// y_t = (1/k) Σ_i T_i x_{i,t} for every word t.
pub fn compute_fused(
    ensemble: &EmbeddingEnsemble,
    transforms: &TransformSet,
) -> Result<FusedEmbedding> {
    check_transforms(ensemble, transforms)?;
    let (n, d, k) = (ensemble.len(), ensemble.dim(), ensemble.k());
    let mut data = vec![0.0; n * d];
    let mut mapped = vec![0.0; d];
    for t in 0..n {
        let out = &mut data[t * d..(t + 1) * d];
        for i in 0..k {
            transforms.transforms[i].apply_into(ensemble.set(i).row(t), &mut mapped);
            for (o, m) in out.iter_mut().zip(&mapped) {
                *o += m;
            }
        }
        for o in out.iter_mut() {
            *o /= k as f64;
        }
    }
    let mut set = EmbeddingSet::new(ensemble.words().to_vec(), data, d)?;
    set.meta.label = Some("fused".into());
    Ok(FusedEmbedding::from_set(set))
}

/// Joint mean-squared alignment score evaluated directly on the n×d data,
/// with the shared-space vectors taken as the optimal per-word mean. This is
/// the reference path; the fit itself uses the cache formula.
pub fn alignment_score(ensemble: &EmbeddingEnsemble, transforms: &TransformSet) -> Result<f64> {
    check_transforms(ensemble, transforms)?;
    let (n, d, k) = (ensemble.len(), ensemble.dim(), ensemble.k());
    let mut mapped = vec![0.0; k * d];
    let mut mean = vec![0.0; d];
    let mut score = 0.0;
    for t in 0..n {
        mean.fill(0.0);
        for i in 0..k {
            let dst = &mut mapped[i * d..(i + 1) * d];
            transforms.transforms[i].apply_into(ensemble.set(i).row(t), dst);
            for (m, v) in mean.iter_mut().zip(dst.iter()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= k as f64;
        }
        for i in 0..k {
            let src = &mapped[i * d..(i + 1) * d];
            for (v, m) in src.iter().zip(&mean) {
                let r = v - m;
                score += r * r;
            }
        }
    }
    Ok(score)
}

/// End-to-end aligned fusion: build the cross-correlation cache, fit the
/// transforms, average in the shared space.
pub fn ssea(
    ensemble: &EmbeddingEnsemble,
    config: &GpaConfig,
) -> Result<(FusedEmbedding, TransformSet)> {
    let cache = compute_cross_correlations(ensemble);
    let transforms = gpa_fit(&cache, config)?;
    let fused = compute_fused(ensemble, &transforms)?;
    Ok((fused, transforms))
}
