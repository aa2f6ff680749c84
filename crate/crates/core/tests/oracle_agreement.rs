use billmap_core::fuzzy_graph::{build_fuzzy_graph, CalibrationOptions};
use billmap_core::optimizer::{cross_entropy, NegativeTerm};
use billmap_core::{fit_kernel, knn_approx, knn_exact, DenseMatrix, Metric};
use billmap_oracles::{
    dense_cross_entropy, dense_knn, dense_membership, fuzzy_to_dense, gaussian_blobs, trustworthiness_direct,
};
use billmap_core::evaluate::trustworthiness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DenseMatrix {
    let data = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    DenseMatrix::new(n, d, data).unwrap()
}

#[test]
fn exact_knn_matches_dense_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = rng.random_range(3..=200);
        let d = rng.random_range(1..=8);
        let k = rng.random_range(1..n.min(30));
        let metric = [Metric::Euclidean, Metric::Manhattan, Metric::Cosine][trial % 3];
        let x = random_matrix(&mut rng, n, d);
        let fast = knn_exact(&x, k, metric).unwrap();
        let slow = dense_knn(&x, k, metric).unwrap();
        for i in 0..n {
            assert_eq!(fast.ids(i), slow.ids(i), "trial {trial}, row {i}");
            for (a, b) in fast.dists(i).iter().zip(slow.dists(i)) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "trial {trial}, row {i}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn k_equal_n_minus_one_lists_everyone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 12, 3);
    let g = knn_exact(&x, 11, Metric::Euclidean).unwrap();
    for i in 0..12 {
        let mut ids = g.ids(i).to_vec();
        ids.sort_unstable();
        let expected: Vec<usize> = (0..12).filter(|&j| j != i).collect();
        assert_eq!(ids, expected);
    }
}

#[test]
fn two_points_are_mutual_neighbors() {
    let x = DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
    let g = knn_exact(&x, 1, Metric::Euclidean).unwrap();
    assert_eq!((g.ids(0), g.ids(1)), (&[1][..], &[0][..]));
    assert_eq!(g.dists(0), g.dists(1));
    assert!((g.dists(0)[0] - 5.0).abs() < 1e-15);
}

#[test]
fn neighbor_descent_recall_on_blobs() {
    let blobs = gaussian_blobs(500, 5, 10, 6.0, 21);
    let exact = dense_knn(&blobs.x, 15, Metric::Euclidean).unwrap();
    let approx = knn_approx(&blobs.x, 15, Metric::Euclidean, 5, 12).unwrap();
    let recall = approx.recall(&exact);
    assert!(recall >= 0.95, "recall {recall}");
}

#[test]
fn fuzzy_graph_matches_dense_membership() {
    let blobs = gaussian_blobs(120, 3, 5, 5.0, 8);
    let g = knn_exact(&blobs.x, 10, Metric::Euclidean).unwrap();
    let fuzzy = build_fuzzy_graph(&g, &CalibrationOptions::default()).unwrap();
    let fast = fuzzy_to_dense(&fuzzy);
    let slow = dense_membership(&g, (10f64).log2()).unwrap();
    for i in 0..120 {
        for j in 0..120 {
            assert!((fast[i][j] - slow[i][j]).abs() < 1e-4, "({i}, {j}): {} vs {}", fast[i][j], slow[i][j]);
        }
    }
}

#[test]
fn cross_entropy_matches_dense_loss() {
    let blobs = gaussian_blobs(150, 3, 6, 6.0, 2);
    let g = knn_exact(&blobs.x, 12, Metric::Euclidean).unwrap();
    let fuzzy = build_fuzzy_graph(&g, &CalibrationOptions::default()).unwrap();
    let v = fuzzy_to_dense(&fuzzy);
    let kernel = fit_kernel(0.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let coords = random_matrix(&mut rng, 150, 2);
        let fast = cross_entropy(&fuzzy, &coords, &kernel, NegativeTerm::Exact).unwrap();
        let slow = dense_cross_entropy(&v, &coords, kernel.a, kernel.b).unwrap();
        assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0), "{fast} vs {slow}");
    }
}

#[test]
fn cross_entropy_vanishes_when_memberships_agree() {
    let coords = DenseMatrix::from_rows(&[[0.0, 0.0], [0.7, 0.2], [1.5, -0.4], [-0.3, 1.1]]).unwrap();
    let (a, b) = (1.3, 0.9);
    let v: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let d: f64 = coords.row(i).iter().zip(coords.row(j)).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                    1.0 / (1.0 + a * d.powf(2.0 * b))
                })
                .collect()
        })
        .collect();
    assert!(dense_cross_entropy(&v, &coords, a, b).unwrap().abs() < 1e-12);
}

#[test]
fn clamp_keeps_coincident_points_finite() {
    let coords = DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
    let v = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
    let loss = dense_cross_entropy(&v, &coords, 1.6, 0.9).unwrap();
    let expected = 2.0 * (0.5 * (0.5f64).ln() + 0.5 * (0.5 / 1e-12f64).ln());
    assert!(loss.is_finite());
    assert!((loss - expected).abs() < 1e-9);
}

#[test]
fn trustworthiness_matches_rank_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for &(n, k) in &[(30, 5), (40, 10), (25, 15), (20, 19)] {
        let x = random_matrix(&mut rng, n, 5);
        let y = random_matrix(&mut rng, n, 2);
        let fast = trustworthiness(&x, &y, k, Metric::Euclidean).unwrap();
        let slow = trustworthiness_direct(&x, &y, k).unwrap();
        assert!((fast - slow).abs() < 1e-12, "n={n} k={k}: {fast} vs {slow}");
    }
}

#[test]
fn direct_trustworthiness_uses_textbook_normalizer_below_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (n, k) = (30usize, 6usize);
    let x = random_matrix(&mut rng, n, 4);
    let y = random_matrix(&mut rng, n, 2);
    let t = trustworthiness_direct(&x, &y, k).unwrap();
    let worst = (n * k * (2 * n - 3 * k - 1)) as f64 / 2.0;
    let penalty = (1.0 - t) * worst;
    assert!((penalty - penalty.round()).abs() < 1e-9, "penalty {penalty} should be an integer");
}
