//! k-nearest-neighbor graphs.
//!
//! [`knn_exact`] compares every pair of rows. [`knn_approx`] runs neighbor
//! descent: start from random neighbor lists and repeatedly try the
//! neighbors of neighbors, which converges to high recall in a handful of
//! sweeps. Both order each row by `(distance, index)` so that ties on
//! duplicate-heavy data resolve to the lower index.

use alloc::{format, vec, vec::Vec};
use core::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{math, DenseMatrix, Error, Result};

/// Below this many points [`knn`] uses the exact search.
pub const EXACT_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    /// `1 - cos(a, b)`. A zero vector is at distance 0 from another zero
    /// vector and 1 from anything else.
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                math::sqrt(s)
            }
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => 1.0,
                    _ => (1.0 - dot / (math::sqrt(na) * math::sqrt(nb))).max(0.0),
                }
            }
        }
    }
}

impl core::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        })
    }
}

/// Per-point neighbor lists, `k` entries per row, ascending by distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNeighborGraph")]
pub struct NeighborGraph {
    pub k: usize,
    pub metric: Metric,
    ids: Vec<usize>,
    dists: Vec<f64>,
}

#[derive(Deserialize)]
struct RawNeighborGraph {
    k: usize,
    metric: Metric,
    ids: Vec<usize>,
    dists: Vec<f64>,
}

impl TryFrom<RawNeighborGraph> for NeighborGraph {
    type Error = Error;

    fn try_from(raw: RawNeighborGraph) -> Result<Self> {
        NeighborGraph::from_parts(raw.k, raw.metric, raw.ids, raw.dists)
    }
}

impl NeighborGraph {
    /// Assembles a graph from flat row-major `ids`/`dists`, checking the
    /// row invariants: ids in range, distinct, no self loops, ascending
    /// non-negative distances.
    pub fn from_parts(k: usize, metric: Metric, ids: Vec<usize>, dists: Vec<f64>) -> Result<Self> {
        if k == 0 || ids.len() != dists.len() || ids.len() % k != 0 {
            return Err(Error::invalid("neighbor ids/dists do not form n x k rows"));
        }
        let n = ids.len() / k;
        for i in 0..n {
            let row = &ids[i * k..(i + 1) * k];
            let d = &dists[i * k..(i + 1) * k];
            if row.iter().any(|&j| j >= n || j == i) {
                return Err(Error::invalid(format!("row {i} has an out-of-range or self id")));
            }
            if (1..k).any(|a| row[..a].contains(&row[a])) {
                return Err(Error::invalid(format!("row {i} repeats a neighbor")));
            }
            if d.iter().any(|x| !(*x >= 0.0)) || d.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid(format!("row {i} distances not ascending")));
            }
        }
        Ok(Self { k, metric, ids, dists })
    }

    pub fn n(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn ids(&self, i: usize) -> &[usize] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    pub fn dists(&self, i: usize) -> &[f64] {
        &self.dists[i * self.k..(i + 1) * self.k]
    }

    /// Fraction of `exact`'s neighbor ids also present in `self`.
    pub fn recall(&self, exact: &NeighborGraph) -> f64 {
        if self.n() != exact.n() || self.k != exact.k {
            return 0.0;
        }
        let hits: usize = (0..self.n())
            .map(|i| {
                let mine = self.ids(i);
                exact.ids(i).iter().filter(|j| mine.contains(j)).count()
            })
            .sum();
        hits as f64 / (self.n() * self.k) as f64
    }
}

#[inline]
fn by_dist_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn validate(x: &DenseMatrix, k: usize) -> Result<()> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k must satisfy 1 <= k < n (k = {k}, n = {n})"
        )));
    }
    x.ensure_finite()
}

/// The `k` rows of `reference` nearest to `query`, skipping `exclude`.
///
/// Requires at least `k` candidate rows.
pub fn nearest_rows(
    reference: &DenseMatrix,
    query: &[f64],
    k: usize,
    metric: Metric,
    exclude: Option<usize>,
) -> Vec<(f64, usize)> {
    let mut cand: Vec<(f64, usize)> = (0..reference.rows())
        .filter(|&j| Some(j) != exclude)
        .map(|j| (metric.distance(query, reference.row(j)), j))
        .collect();
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_dist_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist_then_index);
    cand
}

/// Exact kNN by exhaustive comparison.
pub fn knn_exact(x: &DenseMatrix, k: usize, metric: Metric) -> Result<NeighborGraph> {
    validate(x, k)?;
    let n = x.rows();
    let row = |i: usize| nearest_rows(x, x.row(i), k, metric, Some(i));

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(f64, usize)>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(f64, usize)>> = (0..n).map(row).collect();

    let mut ids = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    for r in rows {
        for (d, j) in r {
            ids.push(j);
            dists.push(d);
        }
    }
    Ok(NeighborGraph { k, metric, ids, dists })
}

/// Bounded neighbor list kept sorted by `(distance, index)`.
struct Candidates {
    entries: Vec<(f64, usize, bool)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Self {
            entries: Vec::with_capacity(k),
        }
    }

    /// Inserts `(d, j)` if it beats the current worst; marks it fresh.
    fn offer(&mut self, d: f64, j: usize, k: usize) -> bool {
        if self.entries.iter().any(|e| e.1 == j) {
            return false;
        }
        let key = (d, j);
        if self.entries.len() == k {
            let worst = self.entries[k - 1];
            if by_dist_then_index(&key, &(worst.0, worst.1)) != Ordering::Less {
                return false;
            }
            self.entries.pop();
        }
        let pos = self
            .entries
            .partition_point(|e| by_dist_then_index(&(e.0, e.1), &key) == Ordering::Less);
        self.entries.insert(pos, (d, j, true));
        true
    }
}

/// Approximate kNN by neighbor descent.
///
/// Falls back to [`knn_exact`] when `n <= 4k`. Runs at most `n_iters`
/// sweeps, stopping early once a sweep changes fewer than `0.1%` of the
/// `n * k` entries. Single-threaded and deterministic for a given `seed`.
pub fn knn_approx(
    x: &DenseMatrix,
    k: usize,
    metric: Metric,
    seed: u64,
    n_iters: usize,
) -> Result<NeighborGraph> {
    validate(x, k)?;
    if n_iters == 0 {
        return Err(Error::invalid("n_iters must be at least 1"));
    }
    let n = x.rows();
    if n <= 4 * k {
        return knn_exact(x, k, metric);
    }
    let mut rng = crate::rng_from(seed, 0x6e6e_6465);
    let dist = |a: usize, b: usize| metric.distance(x.row(a), x.row(b));

    let mut heaps: Vec<Candidates> = (0..n).map(|_| Candidates::new(k)).collect();
    for (i, heap) in heaps.iter_mut().enumerate() {
        while heap.entries.len() < k {
            let j = rng.random_range(0..n);
            if j != i {
                heap.offer(dist(i, j), j, k);
            }
        }
    }

    let stop_below = ((n * k) as f64 * 0.001) as usize;
    let mut fresh: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stale: Vec<Vec<usize>> = vec![Vec::new(); n];
    for _ in 0..n_iters {
        for i in 0..n {
            fresh[i].clear();
            stale[i].clear();
            for e in heaps[i].entries.iter_mut() {
                if e.2 {
                    fresh[i].push(e.1);
                    e.2 = false;
                } else {
                    stale[i].push(e.1);
                }
            }
        }
        // Reverse lists, capped at k entries by reservoir sampling.
        let mut rev_fresh: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut rev_stale: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen_fresh = vec![0usize; n];
        let mut seen_stale = vec![0usize; n];
        for i in 0..n {
            for &j in &fresh[i] {
                reservoir_push(&mut rev_fresh[j], &mut seen_fresh[j], i, k, &mut rng);
            }
            for &j in &stale[i] {
                reservoir_push(&mut rev_stale[j], &mut seen_stale[j], i, k, &mut rng);
            }
        }

        let mut updates = 0usize;
        for i in 0..n {
            let mut new_c = fresh[i].clone();
            merge_unique(&mut new_c, &rev_fresh[i]);
            let mut old_c = stale[i].clone();
            merge_unique(&mut old_c, &rev_stale[i]);
            old_c.retain(|j| !new_c.contains(j));

            for (a, &u) in new_c.iter().enumerate() {
                for &v in new_c[a + 1..].iter().chain(old_c.iter()) {
                    if u == v {
                        continue;
                    }
                    let d = dist(u, v);
                    updates += heaps[u].offer(d, v, k) as usize;
                    updates += heaps[v].offer(d, u, k) as usize;
                }
            }
        }
        if updates <= stop_below {
            break;
        }
    }

    let mut ids = Vec::with_capacity(n * k);
    let mut dists = Vec::with_capacity(n * k);
    for heap in &heaps {
        for &(d, j, _) in &heap.entries {
            ids.push(j);
            dists.push(d);
        }
    }
    Ok(NeighborGraph { k, metric, ids, dists })
}

fn reservoir_push<R: Rng>(list: &mut Vec<usize>, seen: &mut usize, item: usize, cap: usize, rng: &mut R) {
    *seen += 1;
    if list.len() < cap {
        list.push(item);
    } else {
        let slot = rng.random_range(0..*seen);
        if slot < cap {
            list[slot] = item;
        }
    }
}

fn merge_unique(into: &mut Vec<usize>, from: &[usize]) {
    for &j in from {
        if !into.contains(&j) {
            into.push(j);
        }
    }
}

/// Exact search below [`EXACT_THRESHOLD`] points, neighbor descent above.
pub fn knn(x: &DenseMatrix, k: usize, metric: Metric, seed: u64) -> Result<NeighborGraph> {
    if x.rows() < EXACT_THRESHOLD {
        knn_exact(x, k, metric)
    } else {
        knn_approx(x, k, metric, seed, 12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DenseMatrix {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        DenseMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn collinear_points() {
        let g = knn_exact(&line(&[0.0, 1.0, 10.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.ids(0), &[1]);
        assert_eq!(g.ids(1), &[0]);
        assert_eq!(g.ids(2), &[1]);
        assert_eq!(g.dists(2), &[9.0]);
    }

    #[test]
    fn duplicates_are_mutual_neighbors() {
        let g = knn_exact(&line(&[5.0, 0.0, 5.0, 9.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.ids(0), &[2]);
        assert_eq!(g.ids(2), &[0]);
        assert_eq!(g.dists(0), &[0.0]);
    }

    #[test]
    fn ties_break_by_index() {
        let g = knn_exact(&line(&[0.0, -1.0, 1.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.ids(0), &[1]);
    }

    #[test]
    fn k_out_of_range() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert!(matches!(knn_exact(&x, 3, Metric::Euclidean), Err(Error::InvalidArgument(_))));
        assert!(matches!(knn_exact(&x, 0, Metric::Euclidean), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn non_finite_names_row() {
        let x = line(&[0.0, f64::INFINITY, 2.0]);
        assert_eq!(knn_exact(&x, 1, Metric::Euclidean), Err(Error::NonFinite { row: 1 }));
    }

    #[test]
    fn metrics() {
        let a = [1.0, 0.0];
        let b = [0.0, 2.0];
        assert!((Metric::Euclidean.distance(&a, &b) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Metric::Manhattan.distance(&a, &b), 3.0);
        assert!((Metric::Cosine.distance(&a, &b) - 1.0).abs() < 1e-15);
        assert_eq!(Metric::Cosine.distance(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!("Cosine".parse::<Metric>().unwrap(), Metric::Cosine);
        assert!("hamming".parse::<Metric>().is_err());
    }

    #[test]
    fn small_input_falls_back_to_exact() {
        let x = line(&[0.0, 1.0, 3.0, 7.0, 8.0, 20.0, 21.0, 40.0]);
        let exact = knn_exact(&x, 2, Metric::Euclidean).unwrap();
        let approx = knn_approx(&x, 2, Metric::Euclidean, 7, 5).unwrap();
        assert_eq!(approx, exact);
        assert_eq!(approx.recall(&exact), 1.0);
    }

    #[test]
    fn from_parts_checks_rows() {
        assert!(NeighborGraph::from_parts(1, Metric::Euclidean, vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(NeighborGraph::from_parts(1, Metric::Euclidean, vec![0, 0], vec![1.0, 1.0]).is_err());
        assert!(
            NeighborGraph::from_parts(2, Metric::Euclidean, vec![1, 2, 0, 2, 0, 1], vec![2.0, 1.0, 0.0, 1.0, 0.0, 1.0])
                .is_err()
        );
    }
}
