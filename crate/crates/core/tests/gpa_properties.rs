//! Cross-module properties of the alignment pipeline: agreement with the
//! closed-form two-set solution, optimality of the mean, invariance to
//! rotations of the inputs, and determinism.

use embfuse_core::{
    EmbeddingEnsemble, EmbeddingSet, GpaConfig, OrthogonalTransform, TransformSet, alignment_score,
    compute_fused, procrustes_align, random_orthogonal, ssea,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn random_set(rng: &mut ChaCha12Rng, n: usize, d: usize) -> EmbeddingSet {
    let words = (0..n).map(|t| format!("w{t}")).collect();
    let data = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    EmbeddingSet::new(words, data, d).unwrap()
}

fn transform_rows(set: &EmbeddingSet, q: &OrthogonalTransform) -> EmbeddingSet {
    let data: Vec<f64> = set.rows().flat_map(|r| q.apply(r)).collect();
    EmbeddingSet::new(set.words().to_vec(), data, set.dim()).unwrap()
}

/// Test-side evaluation of the joint objective with an explicit shared-space
/// embedding, independent of the library's score paths.
fn score_with_explicit_y(
    ensemble: &EmbeddingEnsemble,
    transforms: &TransformSet,
    y: &[Vec<f64>],
) -> f64 {
    let mut score = 0.0;
    for i in 0..ensemble.k() {
        for (t, row) in ensemble.set(i).rows().enumerate() {
            let mapped = transforms.transforms[i].apply(row);
            score += mapped
                .iter()
                .zip(&y[t])
                .map(|(m, v)| (m - v) * (m - v))
                .sum::<f64>();
        }
    }
    score
}

#[test]
fn two_set_score_matches_closed_form_over_many_instances() {
    let mut rng = ChaCha12Rng::seed_from_u64(60);
    for trial in 0..10 {
        let a = random_set(&mut rng, 50, 8);
        let b = random_set(&mut rng, 50, 8);
        let ens = EmbeddingEnsemble::new(vec![a.clone(), b.clone()]).unwrap();

        let (_, fit) = ssea(&ens, &GpaConfig::default()).unwrap();
        let s_gpa = *fit.score_history.last().unwrap();

        let mut pa = TransformSet::identities(2, 8);
        pa.transforms[0] = procrustes_align(&a, &b).unwrap();
        let s_pa = alignment_score(&ens, &pa).unwrap();

        assert!(
            (s_gpa - s_pa).abs() / s_pa.max(1e-12) <= 1e-6,
            "trial {trial}: {s_gpa} vs {s_pa}"
        );
    }
}

#[test]
fn two_set_fusion_matches_closed_form_fusion_up_to_rotation() {
    let mut rng = ChaCha12Rng::seed_from_u64(61);
    let a = random_set(&mut rng, 40, 6);
    let b = random_set(&mut rng, 40, 6);
    let ens = EmbeddingEnsemble::new(vec![a.clone(), b.clone()]).unwrap();

    let (fused_gpa, _) = ssea(&ens, &GpaConfig::default()).unwrap();

    let mut pa = TransformSet::identities(2, 6);
    pa.transforms[0] = procrustes_align(&a, &b).unwrap();
    let fused_pa = compute_fused(&ens, &pa).unwrap();

    let gap = embfuse_core::pairwise_mse(fused_gpa.as_set(), fused_pa.as_set()).unwrap();
    assert!(gap <= 1e-12, "fusions differ by {gap}");
}

#[test]
fn fused_rows_recompute_as_the_mean_of_mapped_vectors() {
    let mut rng = ChaCha12Rng::seed_from_u64(62);
    let sets: Vec<_> = (0..4).map(|_| random_set(&mut rng, 30, 5)).collect();
    let ens = EmbeddingEnsemble::new(sets).unwrap();
    let (fused, fit) = ssea(&ens, &GpaConfig::default()).unwrap();
    for (t, row) in fused.as_set().rows().enumerate() {
        let mut mean = vec![0.0; 5];
        for i in 0..4 {
            let mapped = fit.transforms[i].apply(ens.set(i).row(t));
            for (m, v) in mean.iter_mut().zip(&mapped) {
                *m += v / 4.0;
            }
        }
        for (a, b) in row.iter().zip(&mean) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn perturbing_the_mean_strictly_increases_the_objective() {
    let mut rng = ChaCha12Rng::seed_from_u64(63);
    let sets: Vec<_> = (0..3).map(|_| random_set(&mut rng, 25, 4)).collect();
    let ens = EmbeddingEnsemble::new(sets).unwrap();
    let (fused, fit) = ssea(&ens, &GpaConfig::default()).unwrap();

    let y_opt: Vec<Vec<f64>> = fused.as_set().rows().map(|r| r.to_vec()).collect();
    let base = score_with_explicit_y(&ens, &fit, &y_opt);
    assert!((base - alignment_score(&ens, &fit).unwrap()).abs() <= 1e-9 * base.max(1e-12));

    for scale in [1e-3, 1e-1, 1.0] {
        let perturbed: Vec<Vec<f64>> = y_opt
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let worse = score_with_explicit_y(&ens, &fit, &perturbed);
        assert!(worse > base, "scale {scale}: {worse} <= {base}");
    }
}

#[test]
fn fusion_is_invariant_to_rotations_of_the_non_anchor_inputs() {
    let mut rng = ChaCha12Rng::seed_from_u64(64);
    let k = 4;
    let d = 5;
    let sets: Vec<_> = (0..k).map(|_| random_set(&mut rng, 35, d)).collect();
    let ens = EmbeddingEnsemble::new(sets.clone()).unwrap();
    let (fused, _) = ssea(&ens, &GpaConfig::default()).unwrap();

    // Rotate every set except the last, which anchors the shared space.
    let mut rotated = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        if i + 1 < k {
            rotated.push(transform_rows(s, &random_orthogonal(d, &mut rng)));
        } else {
            rotated.push(s.clone());
        }
    }
    let ens2 = EmbeddingEnsemble::new(rotated).unwrap();
    let (fused2, _) = ssea(&ens2, &GpaConfig::default()).unwrap();

    for (a, b) in fused.as_set().data().iter().zip(fused2.as_set().data()) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn ssea_is_deterministic() {
    let mut rng = ChaCha12Rng::seed_from_u64(65);
    let sets: Vec<_> = (0..3).map(|_| random_set(&mut rng, 30, 6)).collect();
    let ens = EmbeddingEnsemble::new(sets).unwrap();
    let (f1, t1) = ssea(&ens, &GpaConfig::default()).unwrap();
    let (f2, t2) = ssea(&ens, &GpaConfig::default()).unwrap();
    assert_eq!(f1.as_set().data(), f2.as_set().data());
    assert_eq!(t1.score_history, t2.score_history);
    for (a, b) in t1.transforms.iter().zip(&t2.transforms) {
        assert_eq!(a.matrix(), b.matrix());
    }
}
