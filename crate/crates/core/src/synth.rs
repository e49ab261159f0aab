//! Ground-truth-known synthetic ensembles: random per-set orthogonal maps
//! over a shared latent embedding plus Gaussian noise. Every denoising claim
//! that cannot be reproduced from full-corpus trainings is checked against
//! these constructions instead.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::Result;
use crate::embedding::{EmbeddingEnsemble, EmbeddingSet, FrequencyTable};
use crate::error::Error;
use crate::eval::naive_average;
use crate::fmath;
use crate::procrustes::{
    FusedEmbedding, GpaConfig, ORTHOGONALITY_TOL, OrthogonalTransform, compute_cross_correlations,
    compute_fused, gpa_fit,
};
use crate::stability::{
    average_stability, frequency_binned_mse, pairwise_mse, per_word_discrepancy,
};

/// Synthetic frequency counts are drawn from a bounded power law over this
/// range, which spans seven width-50 bins.
const COUNT_MIN: f64 = 10.0;
const COUNT_MAX: f64 = 350.0;

/// Parameters of a synthetic ensemble.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    /// Vocabulary size.
    pub n: usize,
    /// Embedding dimension.
    pub d: usize,
    /// Number of sets.
    pub k: usize,
    /// Per-coordinate noise standard deviation (scaled by 1/√count when a
    /// frequency profile is active).
    pub sigma: f64,
    pub seed: u64,
    /// Power-law exponent for synthetic corpus counts; enables the
    /// frequency-binned checks.
    pub freq_profile: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 20,
            k: 10,
            sigma: 0.1,
            seed: 42,
            freq_profile: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.d < 1 || self.k < 1 {
            return Err(Error::InvalidArgument("n, d and k must all be >= 1".into()));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidArgument(
                "sigma must be finite and >= 0".into(),
            ));
        }
        if let Some(alpha) = self.freq_profile
            && (!alpha.is_finite() || alpha <= 0.0)
        {
            return Err(Error::InvalidArgument(
                "freq_profile exponent must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
/// of diag(R) fixed. Covers both determinant signs.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> OrthogonalTransform {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = q[(i, j)];
        }
    }
    OrthogonalTransform::new(out, d).expect("QR factor is orthogonal")
}

/// A generated ensemble together with everything a white-box test needs.
#[derive(Debug, Clone)]
pub struct SyntheticEnsemble {
    /// The latent embedding the sets are noisy orthogonal images of.
    pub truth: EmbeddingSet,
    pub ensemble: EmbeddingEnsemble,
    /// The planted per-set transforms R_i.
    pub planted: Vec<OrthogonalTransform>,
    /// Synthetic corpus counts, present when the config has a frequency
    /// profile.
    pub freqs: Option<FrequencyTable>,
}

fn bounded_power_law(alpha: f64, u: f64) -> u64 {
    // Inverse CDF of a density ∝ c^(−alpha) on [COUNT_MIN, COUNT_MAX).
    let c = if fmath::abs(alpha - 1.0) < 1e-9 {
        COUNT_MIN * fmath::powf(COUNT_MAX / COUNT_MIN, u)
    } else {
        let e = 1.0 - alpha;
        let lo = fmath::powf(COUNT_MIN, e);
        let hi = fmath::powf(COUNT_MAX, e);
        fmath::powf(lo + u * (hi - lo), 1.0 / e)
    };
    c as u64
}

fn generate_truth(config: &SynthConfig) -> (EmbeddingSet, Option<FrequencyTable>) {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let (n, d) = (config.n, config.d);

    let mut data: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    // Center the latent rows so the gram matrices stay full rank and the
    // noise-variance bookkeeping stays exact.
    let mut means = vec![0.0; d];
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

    let words: Vec<String> = (0..n).map(|t| format!("w{t}")).collect();
    let truth = EmbeddingSet::new(words.clone(), data, d)
        .expect("generated data is valid")
        .with_label("truth");

    let freqs = config.freq_profile.map(|alpha| {
        words
            .iter()
            .map(|w| (w.clone(), bounded_power_law(alpha, rng.random::<f64>())))
            .collect()
    });

    (truth, freqs)
}

/// Draw k sets x_{i,t} = R_i (y*_t + ε_{i,t}) from an existing latent truth,
/// with fresh rotations and noise seeded by `draw_seed`.
pub fn draw_ensemble(
    truth: &EmbeddingSet,
    freqs: Option<&FrequencyTable>,
    config: &SynthConfig,
    draw_seed: u64,
) -> Result<(EmbeddingEnsemble, Vec<OrthogonalTransform>)> {
    config.validate()?;
    if config.k < 2 {
        return Err(Error::TooFew {
            what: "embedding sets",
            required: 2,
            actual: config.k,
        });
    }
    let (n, d) = (truth.len(), truth.dim());
    let mut rng = ChaCha12Rng::seed_from_u64(draw_seed);

    // Per-word noise scale: σ/√count under a frequency profile, σ otherwise.
    let noise_scale: Vec<f64> = match freqs {
        Some(table) => truth
            .words()
            .iter()
            .map(|w| {
                let c = table.get(w).unwrap_or(1).max(1);
                config.sigma / fmath::sqrt(c as f64)
            })
            .collect(),
        None => vec![config.sigma; n],
    };

    let mut planted = Vec::with_capacity(config.k);
    let mut sets = Vec::with_capacity(config.k);
    for i in 0..config.k {
        let rot = random_orthogonal(d, &mut rng);
        let mut data = vec![0.0; n * d];
        let mut noisy = vec![0.0; d];
        for (t, row) in truth.rows().enumerate() {
            for (nv, v) in noisy.iter_mut().zip(row) {
                *nv = v + noise_scale[t] * rng.sample::<f64, _>(StandardNormal);
            }
            rot.apply_into(&noisy, &mut data[t * d..(t + 1) * d]);
        }
        let set = EmbeddingSet::new(truth.words().to_vec(), data, d)?
            .with_label(format!("synthetic-{i}"));
        sets.push(set);
        planted.push(rot);
    }

    Ok((EmbeddingEnsemble::new(sets)?, planted))
}

/// Generate truth, counts and one ensemble draw from a single seed.
pub fn generate_ensemble(config: &SynthConfig) -> Result<SyntheticEnsemble> {
    config.validate()?;
    let (truth, freqs) = generate_truth(config);
    let draw_seed = config.seed ^ 0x9e37_79b9_7f4a_7c15;
    let (ensemble, planted) = draw_ensemble(&truth, freqs.as_ref(), config, draw_seed)?;
    Ok(SyntheticEnsemble {
        truth,
        ensemble,
        planted,
        freqs,
    })
}

/// MSE between a fused embedding and the latent truth after optimal
/// orthogonal alignment, so the arbitrary global orientation of the shared
/// space costs nothing.
pub fn recovery_error(fused: &FusedEmbedding, truth: &EmbeddingSet) -> Result<f64> {
    pairwise_mse(fused.as_set(), truth)
}

/// One oracle assertion: a measured value compared against a bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// "<=" or ">=".
    pub comparison: &'static str,
    pub pass: bool,
}

impl OracleCheck {
    fn le(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            comparison: "<=",
            pass: measured <= bound,
        }
    }

    fn ge(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            comparison: ">=",
            pass: measured >= bound,
        }
    }
}

/// Outcome of the full synthetic assertion suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SynthVerdict {
    pub config: SynthConfig,
    pub checks: Vec<OracleCheck>,
    pub all_pass: bool,
}

/// Run every oracle assertion that applies to `config` and report measured
/// versus expected values.
pub fn run_oracle_checks(config: &SynthConfig) -> Result<SynthVerdict> {
    config.validate()?;
    if config.k < 2 {
        return Err(Error::TooFew {
            what: "embedding sets",
            required: 2,
            actual: config.k,
        });
    }

    let base = generate_ensemble(config)?;
    let gpa = GpaConfig::default();
    let cache = compute_cross_correlations(&base.ensemble);
    let fit = gpa_fit(&cache, &gpa)?;
    let fused = compute_fused(&base.ensemble, &fit)?;

    let mut checks = Vec::new();

    let planted_defect = base
        .planted
        .iter()
        .map(|t| t.orthogonality_defect())
        .fold(0.0_f64, f64::max);
    checks.push(OracleCheck::le(
        "planted_orthogonality_defect",
        planted_defect,
        ORTHOGONALITY_TOL,
    ));

    let fit_defect = fit
        .transforms
        .iter()
        .map(|t| t.orthogonality_defect())
        .fold(0.0_f64, f64::max);
    checks.push(OracleCheck::le(
        "fitted_orthogonality_defect",
        fit_defect,
        ORTHOGONALITY_TOL,
    ));

    let mut max_rel_increase: f64 = 0.0;
    for w in fit.score_history.windows(2) {
        max_rel_increase = max_rel_increase.max((w[1] - w[0]) / w[0].abs().max(1e-300));
    }
    checks.push(OracleCheck::le(
        "max_relative_score_increase",
        max_rel_increase,
        1e-9,
    ));

    let fused_error = recovery_error(&fused, &base.truth)?;
    if config.sigma == 0.0 {
        checks.push(OracleCheck::le("exact_recovery_error", fused_error, 1e-10));
    } else {
        // Mean of k independent noises has variance σ_t²/k per coordinate, so
        // the expected residual is d/k times the mean per-word noise variance.
        let mean_noise_var: f64 = match (&base.freqs, config.freq_profile) {
            (Some(table), Some(_)) => {
                let s: f64 = base
                    .truth
                    .words()
                    .iter()
                    .map(|w| {
                        let c = table.get(w).unwrap_or(1).max(1) as f64;
                        config.sigma * config.sigma / c
                    })
                    .sum();
                s / base.truth.len() as f64
            }
            _ => config.sigma * config.sigma,
        };
        let expected = mean_noise_var * config.d as f64 / config.k as f64;
        let ratio = fused_error / expected;
        checks.push(OracleCheck::le("recovery_vs_noise_oracle", ratio, 2.0));
        checks.push(OracleCheck::ge(
            "recovery_vs_noise_oracle_floor",
            ratio,
            0.5,
        ));

        let min_raw = base
            .ensemble
            .sets()
            .iter()
            .map(|s| pairwise_mse(s, &base.truth))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        checks.push(OracleCheck::le(
            "fused_vs_best_raw_recovery",
            fused_error / min_raw,
            1.0,
        ));
    }

    if config.d >= 2 {
        let naive = naive_average(&base.ensemble);
        let naive_error = recovery_error(&naive, &base.truth)?;
        checks.push(OracleCheck::ge(
            "naive_vs_fused_recovery",
            naive_error / fused_error.max(1e-300),
            10.0,
        ));
    }

    if config.sigma > 0.0 {
        let second_seed = config.seed ^ 0x5851_f42d_4c95_7f2d;
        let (ensemble2, _) = draw_ensemble(&base.truth, base.freqs.as_ref(), config, second_seed)?;
        let cache2 = compute_cross_correlations(&ensemble2);
        let fused2 = compute_fused(&ensemble2, &gpa_fit(&cache2, &gpa)?)?;

        let raw = average_stability(base.ensemble.sets(), 10, config.seed)?;
        let den = average_stability(
            &[fused.as_set().clone(), fused2.as_set().clone()],
            10,
            config.seed,
        )?;
        let ratio = den.mean_mse / raw.mean_mse.max(1e-300);
        let bound = (3.0 / config.k as f64).min(0.8);
        checks.push(OracleCheck::le("fused_vs_raw_stability", ratio, bound));

        if let (Some(table), true) = (&base.freqs, config.freq_profile.is_some()) {
            // Average the raw discrepancy over matching cross-draw pairs to
            // tame per-bin sampling noise.
            let pairs = config.k.min(3);
            let mut raw_disc = vec![0.0; base.truth.len()];
            for i in 0..pairs {
                let disc = per_word_discrepancy(base.ensemble.set(i), ensemble2.set(i))?;
                for (acc, v) in raw_disc.iter_mut().zip(&disc) {
                    *acc += v;
                }
            }
            for v in raw_disc.iter_mut() {
                *v /= pairs as f64;
            }
            let fused_disc = per_word_discrepancy(fused.as_set(), fused2.as_set())?;

            let words = base.truth.words();
            let raw_curve = frequency_binned_mse(&raw_disc, table, words, 50)?;
            let fused_curve = frequency_binned_mse(&fused_disc, table, words, 50)?;

            checks.push(OracleCheck::ge(
                "populated_frequency_bins",
                raw_curve.points.len() as f64,
                5.0,
            ));
            let mut worst_step: f64 = 0.0;
            for w in raw_curve.points.windows(2) {
                worst_step = worst_step.max(w[1].mean_mse / w[0].mean_mse);
            }
            checks.push(OracleCheck::le(
                "raw_curve_max_adjacent_ratio",
                worst_step,
                1.0 - 1e-12,
            ));
            let worst_bin = raw_curve
                .points
                .iter()
                .zip(&fused_curve.points)
                .map(|(r, f)| f.mean_mse / r.mean_mse)
                .fold(0.0_f64, f64::max);
            checks.push(OracleCheck::le(
                "fused_curve_below_raw_in_every_bin",
                worst_bin,
                1.0,
            ));
        }
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(SynthVerdict {
        config: config.clone(),
        checks,
        all_pass,
    })
}
