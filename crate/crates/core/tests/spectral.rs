use latentpack::bench::search_latent_sizes;
use latentpack::codecs::CodecId;
use latentpack::latent::{
    embed, estimate_latents, kmeans, latent_error, threshold_cluster, top_singular_vectors, EmbeddingMap, SpectralConfig,
};
use latentpack::model::{sample_table, sbm_params, Alphabet, Table};
use latentpack::rng::Rng;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = Rng::new(seed);
    DMatrix::from_fn(m, n, |_, _| 2.0 * rng.uniform() - 1.0)
}

#[test]
fn matches_dense_decomposition() {
    for seed in 0..5 {
        let m = random_matrix(50, 80, seed);
        let f = top_singular_vectors(&m, 5, 400, seed).unwrap();
        let mut dense: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        dense.sort_by(|a, b| b.total_cmp(a));
        for (i, s) in f.sigma.iter().enumerate() {
            assert!((s - dense[i]).abs() < 1e-6, "seed {seed} sigma_{i}: {s} vs {}", dense[i]);
        }
        let ata = f.a.transpose() * &f.a;
        let btb = f.b.transpose() * &f.b;
        let eye = DMatrix::<f64>::identity(5, 5);
        assert!((ata - &eye).abs().max() < 1e-8);
        assert!((btb - &eye).abs().max() < 1e-8);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn expectation_matrix_has_large_kth_singular_value() {
    let (p0, p1, k, side) = (0.05, 0.5, 3, 300);
    let params = sbm_params(p0, p1, k).unwrap();
    let (_, truth) = sample_table(&params, side, side, 3).unwrap();
    // Entry mean of the +-1 embedding is 2p - 1.
    let mean = DMatrix::from_fn(side, side, |i, j| {
        let p = if truth.rows[i] == truth.cols[j] { p1 } else { p0 };
        2.0 * p - 1.0
    });
    let f = top_singular_vectors(&mean, k, 60, 1).unwrap();
    let mut dense: Vec<f64> = mean.svd(false, false).singular_values.iter().copied().collect();
    dense.sort_by(|a, b| b.total_cmp(a));
    assert!((f.sigma[k - 1] - dense[k - 1]).abs() < 1e-6);
    let mu = (p1 - p0).abs();
    let scale = mu * ((side * side) as f64).sqrt();
    assert!(f.sigma[k - 1] >= scale / k as f64, "sigma_k {} vs {}", f.sigma[k - 1], scale / k as f64);
}

#[test]
fn kmeans_recovers_sbm_row_factors() {
    let params = sbm_params(0.05, 0.5, 3).unwrap();
    let mut exact = 0;
    for seed in 0..5 {
        let (t, truth) = sample_table(&params, 600, 600, 50 + seed).unwrap();
        let m = embed(&t, &EmbeddingMap::affine(t.alphabet())).unwrap();
        let f = top_singular_vectors(&m, 3, 48, seed).unwrap();
        let points: Vec<Vec<f64>> = (0..600).map(|i| f.a.row(i).iter().copied().collect()).collect();
        let res = kmeans(&points, 3, 5, seed).unwrap();
        if latent_error(&res.labels, &truth.rows, 3).unwrap() == 0.0 {
            exact += 1;
        }
    }
    assert!(exact >= 4, "exact in {exact}/5");
}

#[test]
fn subsampled_estimation_recovers_latents() {
    let params = sbm_params(0.05, 0.5, 3).unwrap();
    let mut exact = 0;
    for seed in 0..5 {
        let (t, truth) = sample_table(&params, 1000, 1000, 70 + seed).unwrap();
        let cfg = SpectralConfig { k_r: 3, k_c: 3, row_subsample: Some(0.1), seed, ..Default::default() };
        let est = estimate_latents(&t, &cfg).unwrap();
        if latent_error(&est.rows, &truth.rows, 3).unwrap() == 0.0 && latent_error(&est.cols, &truth.cols, 3).unwrap() == 0.0 {
            exact += 1;
        }
    }
    assert!(exact >= 4, "exact in {exact}/5");
}

#[test]
fn trivial_structure_gives_zero_labels() {
    let params = sbm_params(0.0, 1.0, 1).unwrap();
    let (t, _) = sample_table(&params, 20, 30, 0).unwrap();
    let est = estimate_latents(&t, &SpectralConfig::new(1, 1)).unwrap();
    assert!(est.rows.iter().chain(&est.cols).all(|&l| l == 0));
}

#[test]
fn estimation_is_deterministic() {
    let params = sbm_params(0.2, 0.7, 2).unwrap();
    let (t, _) = sample_table(&params, 80, 60, 4).unwrap();
    let cfg = SpectralConfig { k_r: 2, k_c: 3, seed: 11, ..Default::default() };
    assert_eq!(estimate_latents(&t, &cfg).unwrap(), estimate_latents(&t, &cfg).unwrap());
    let sub = SpectralConfig { row_subsample: Some(0.5), ..cfg };
    assert_eq!(estimate_latents(&t, &sub).unwrap(), estimate_latents(&t, &sub).unwrap());
}

#[test]
fn search_finds_three_classes() {
    let params = sbm_params(0.05, 0.5, 3).unwrap();
    let mut hits = 0;
    for run in 0..5 {
        let (t, _) = sample_table(&params, 240, 240, 900 + run).unwrap();
        let base = SpectralConfig { seed: run, ..Default::default() };
        let res = search_latent_sizes(&t, 1..=6, 1..=6, CodecId::Ans, &base, 1).unwrap();
        if res.best_k_r == 3 {
            hits += 1;
        }
    }
    assert!(hits >= 4, "best k_r = 3 in {hits}/5 runs");
}

#[test]
fn latents_do_not_matter_without_structure() {
    let params = sbm_params(0.3, 0.3, 3).unwrap();
    let (t, _) = sample_table(&params, 500, 500, 5).unwrap();
    let res = search_latent_sizes(&t, 1..=6, 1..=6, CodecId::Ans, &SpectralConfig::default(), 1).unwrap();
    let drrs: Vec<f64> = res.grid.iter().map(|g| g.mean_drr).collect();
    let spread = drrs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - drrs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 0.02, "DRR spread {spread}");
}

#[test]
fn custom_embedding_bound() {
    let t = Table::new(1, 3, Alphabet::new(3).unwrap(), vec![0, 1, 2]).unwrap();
    assert!(EmbeddingMap::new(vec![0.0, 1.0, 2.0]).is_err());
    let psi = EmbeddingMap::new(vec![0.5, -0.5, 1.0]).unwrap();
    assert_eq!(embed(&t, &psi).unwrap().row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, -0.5, 1.0]);
    let bin = Table::new(2, 2, Alphabet::new(2).unwrap(), vec![0, 1, 1, 0]).unwrap();
    let m = embed(&bin, &EmbeddingMap::affine(bin.alphabet())).unwrap();
    assert!(m.iter().all(|&x| x == 1.0 || x == -1.0));
}

fn relabel(labels: &[u32], perm: &[u32]) -> Vec<u32> {
    labels.iter().map(|&l| perm[l as usize]).collect()
}

proptest! {
    #[test]
    fn error_is_relabeling_invariant(
        truth in prop::collection::vec(0u32..4, 1..60),
        est in prop::collection::vec(0u32..4, 60),
        p in Just(vec![0u32, 1, 2, 3]).prop_shuffle(),
        q in Just(vec![0u32, 1, 2, 3]).prop_shuffle(),
    ) {
        let est = &est[..truth.len()];
        let base = latent_error(est, &truth, 4).unwrap();
        let moved = latent_error(&relabel(est, &p), &relabel(&truth, &q), 4).unwrap();
        prop_assert!((base - moved).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn threshold_labels_respect_edges(
        points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..40),
        theta in 0.01f64..1.0,
    ) {
        let labels = threshold_cluster(&points, theta).unwrap();
        prop_assert_eq!(labels.len(), points.len());
        // Component ids appear in first-occurrence order.
        let mut next = 0;
        for &l in &labels {
            prop_assert!(l <= next);
            if l == next {
                next += 1;
            }
        }
        let norm = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let mean = (norm(&points[i]) + norm(&points[j])) / 2.0;
                if mean == 0.0 || d / mean <= theta {
                    prop_assert_eq!(labels[i], labels[j]);
                }
            }
        }
    }
}

#[test]
fn assignment_error_never_exceeds_planted_permutation() {
    // Nine labels takes the assignment path rather than enumeration.
    let mut rng = Rng::new(2);
    for _ in 0..20 {
        let truth: Vec<u32> = (0..200).map(|_| rng.below(9) as u32).collect();
        let perm: Vec<u32> = {
            let mut p: Vec<u32> = (0..9).collect();
            rng.shuffle(&mut p);
            p
        };
        let mut est = relabel(&truth, &perm);
        let flips = rng.below(30);
        for i in 0..flips {
            est[i * 3] = rng.below(9) as u32;
        }
        let err = latent_error(&est, &truth, 9).unwrap();
        let under_perm = est.iter().zip(&truth).filter(|(e, t)| **e != perm[**t as usize]).count() as f64 / 200.0;
        assert!(err <= under_perm + 1e-12);
        assert!(err >= 0.0);
    }
}
