use billmap_core::DenseMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Labeled Gaussian blobs.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub x: DenseMatrix,
    pub labels: Vec<usize>,
}

/// `n` points in `dim` dimensions around `centers` unit-variance Gaussian
/// centers, with every pair of centers `separation` apart (centers at
/// `separation / sqrt 2` along distinct axes). Points are assigned to
/// blobs round-robin, so blob sizes differ by at most one.
pub fn gaussian_blobs(n: usize, centers: usize, dim: usize, separation: f64, seed: u64) -> Blobs {
    assert!(centers >= 1 && centers <= dim, "need 1 <= centers <= dim");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = separation / std::f64::consts::SQRT_2;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers;
        for d in 0..dim {
            let noise: f64 = StandardNormal.sample(&mut rng);
            data.push(if d == c { offset } else { 0.0 } + noise);
        }
        labels.push(c);
    }
    // Shuffle rows so that index order carries no label information.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let rows: Vec<&[f64]> = order.iter().map(|&i| &data[i * dim..(i + 1) * dim]).collect();
    Blobs {
        x: DenseMatrix::from_rows(&rows).expect("rectangular"),
        labels: order.iter().map(|&i| labels[i]).collect(),
    }
}
