use billmap_core::{DenseMatrix, FuzzyGraph, Metric, NeighborGraph};

/// Largest input [`dense_knn`] and [`trustworthiness_direct`] accept.
pub const DENSE_KNN_LIMIT: usize = 2000;
/// Largest input [`dense_cross_entropy`] and [`dense_membership`] accept.
pub const DENSE_LOSS_LIMIT: usize = 500;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{what}: n = {n} exceeds the oracle limit of {limit}")]
    TooLarge { what: &'static str, n: usize, limit: usize },
    #[error("{0}")]
    Argument(String),
}

fn guard(what: &'static str, n: usize, limit: usize) -> Result<(), OracleError> {
    if n > limit {
        return Err(OracleError::TooLarge { what, n, limit });
    }
    Ok(())
}

fn distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 && nb == 0.0 {
                0.0
            } else if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                (1.0 - dot / (na * nb)).max(0.0)
            }
        }
    }
}

/// Exact kNN from the full distance matrix, ties broken by index.
pub fn dense_knn(x: &DenseMatrix, k: usize, metric: Metric) -> Result<NeighborGraph, OracleError> {
    let n = x.rows();
    guard("dense_knn", n, DENSE_KNN_LIMIT)?;
    if k == 0 || k >= n {
        return Err(OracleError::Argument(format!("k = {k} must lie in 1..{n}")));
    }
    let mut ids = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut all: Vec<(f64, usize)> =
            (0..n).filter(|&j| j != i).map(|j| (distance(metric, x.row(i), x.row(j)), j)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, j) in &all[..k] {
            ids.push(j);
            dists.push(d);
        }
    }
    NeighborGraph::from_parts(k, metric, ids, dists).map_err(|e| OracleError::Argument(e.to_string()))
}

/// Dense symmetric membership matrix straight from the definitions:
/// sigma found by plain bisection on a linear bracket, directed strengths
/// `exp(-(d - rho) / sigma)`, union `a + b - ab`.
pub fn dense_membership(graph: &NeighborGraph, target: f64) -> Result<Vec<Vec<f64>>, OracleError> {
    let n = graph.n();
    guard("dense_membership", n, DENSE_LOSS_LIMIT)?;
    let mut directed = vec![vec![0.0; n]; n];
    for i in 0..n {
        let d = graph.dists(i);
        let rho = d[0];
        let mass = |s: f64| d.iter().map(|&x| (-(x - rho).max(0.0) / s).exp()).sum::<f64>();
        let (mut lo, mut hi) = (1e-8_f64, 1e6_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let sigma = 0.5 * (lo + hi);
        for (&j, &dj) in graph.ids(i).iter().zip(d) {
            directed[i][j] = (-(dj - rho).max(0.0) / sigma).exp();
        }
    }
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (directed[i][j], directed[j][i]);
            v[i][j] = a + b - a * b;
        }
    }
    Ok(v)
}

/// A fuzzy graph's edges as a dense symmetric matrix.
pub fn fuzzy_to_dense(graph: &FuzzyGraph) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; graph.n]; graph.n];
    for e in graph.edges() {
        v[e.i][e.j] = e.weight;
        v[e.j][e.i] = e.weight;
    }
    v
}

/// Cross-entropy summed over every ordered pair `i != j`, with the low
/// dimensional membership `1 / (1 + a d^{2b})` and both logarithms'
/// arguments clamped below at 1e-12.
pub fn dense_cross_entropy(v: &[Vec<f64>], coords: &DenseMatrix, a: f64, b: f64) -> Result<f64, OracleError> {
    let n = coords.rows();
    guard("dense_cross_entropy", n, DENSE_LOSS_LIMIT)?;
    if v.len() != n || v.iter().any(|r| r.len() != n) {
        return Err(OracleError::Argument("membership matrix must be n x n".into()));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distance(Metric::Euclidean, coords.row(i), coords.row(j));
            let w = 1.0 / (1.0 + a * d.powf(2.0 * b));
            let vij = v[i][j];
            if vij > 0.0 {
                total += vij * (vij.max(EPS) / w.max(EPS)).ln();
            }
            if vij < 1.0 {
                total += (1.0 - vij) * ((1.0 - vij).max(EPS) / (1.0 - w).max(EPS)).ln();
            }
        }
    }
    Ok(total)
}

/// Central differences of `f` at `x` with step `h`.
pub fn numerical_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Trustworthiness by counting ranks directly. Every row's full ranking is
/// sorted (ties by index); the normalizer is the largest total penalty any
/// embedding could incur, found by summing the worst possible ranks.
pub fn trustworthiness_direct(x: &DenseMatrix, y: &DenseMatrix, k: usize) -> Result<f64, OracleError> {
    let n = x.rows();
    guard("trustworthiness_direct", n, DENSE_KNN_LIMIT)?;
    if k == 0 || k >= n || y.rows() != n {
        return Err(OracleError::Argument("need k in 1..n and matching rows".into()));
    }
    let order = |m: &DenseMatrix, i: usize| {
        let mut o: Vec<(f64, usize)> =
            (0..n).filter(|&j| j != i).map(|j| (distance(Metric::Euclidean, m.row(i), m.row(j)), j)).collect();
        o.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        o.into_iter().map(|(_, j)| j).collect::<Vec<_>>()
    };
    let mut penalty = 0usize;
    for i in 0..n {
        let feature_order = order(x, i);
        let mut rank = vec![0usize; n];
        for (r, &j) in feature_order.iter().enumerate() {
            rank[j] = r + 1;
        }
        for &j in &order(y, i)[..k] {
            penalty += rank[j].saturating_sub(k);
        }
    }
    let worst_per_row: usize = (1..n).rev().take(k).map(|r| r.saturating_sub(k)).sum();
    let worst = n * worst_per_row;
    if worst == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - penalty as f64 / worst as f64)
}

/// Least-squares fit of `1 / (1 + a x^{2b})` to the curve that is 1 up to
/// `min_dist` and `exp(-(x - min_dist) / spread)` beyond, on 300 points in
/// `[0, 3 spread]`, by Nelder-Mead in `(ln a, ln b)`.
pub fn fit_kernel_nelder_mead(min_dist: f64, spread: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> =
        xs.iter().map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() }).collect();
    let sse = |p: [f64; 2]| -> f64 {
        let (a, b) = (p[0].exp(), p[1].exp());
        xs.iter().zip(&ys).map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2)).sum()
    };
    let mut simplex = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]];
    let mut f: Vec<f64> = simplex.iter().map(|&p| sse(p)).collect();
    for _ in 0..4000 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| f[i].total_cmp(&f[j]));
        let (best, mid, worst) = (idx[0], idx[1], idx[2]);
        if (f[worst] - f[best]).abs() < 1e-15 {
            break;
        }
        let c = [0.5 * (simplex[best][0] + simplex[mid][0]), 0.5 * (simplex[best][1] + simplex[mid][1])];
        let along = |t: f64| [c[0] + t * (simplex[worst][0] - c[0]), c[1] + t * (simplex[worst][1] - c[1])];
        let r = along(-1.0);
        let fr = sse(r);
        if fr < f[best] {
            let e = along(-2.0);
            let fe = sse(e);
            (simplex[worst], f[worst]) = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < f[mid] {
            (simplex[worst], f[worst]) = (r, fr);
        } else {
            let ct = along(0.5);
            let fc = sse(ct);
            if fc < f[worst] {
                (simplex[worst], f[worst]) = (ct, fc);
            } else {
                for i in [mid, worst] {
                    for d in 0..2 {
                        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    }
                    f[i] = sse(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| f[i].total_cmp(&f[j])).unwrap_or(0);
    (simplex[best][0].exp(), simplex[best][1].exp())
}
