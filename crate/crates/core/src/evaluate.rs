//! Layout quality and projection alignment metrics.
//!
//! Everything here depends on the layout only through distances and
//! neighbor ranks, so all metrics are invariant under rigid motions.

use alloc::{collections::BTreeMap, format, string::String, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::neighbors::nearest_rows;
use crate::{DenseMatrix, Error, Metric, Result};

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k < n (k = {k}, n = {n})")));
    }
    Ok(())
}

fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Largest possible rank penalty for one point: the sum of the
/// `min(k, n - 1 - k)` largest values of `rank - k` over ranks `k+1..n-1`.
/// Equals `k (2n - 3k - 1) / 2` whenever `k < n / 2`.
fn max_penalty(n: usize, k: usize) -> f64 {
    let outside = n - 1 - k;
    (0..k.min(outside)).map(|m| (outside - m) as f64).sum()
}

/// Trustworthiness of `coords` as a layout of `x` at neighborhood size `k`.
///
/// For every point, each embedding-space `k`-neighbor that is not a
/// feature-space `k`-neighbor is charged `r - k`, where `r` is its 1-based
/// rank by feature distance. The total is normalized by its maximum, so
/// the score lies in `[0, 1]` for every `k < n`. Ties rank by row index.
pub fn trustworthiness(x: &DenseMatrix, coords: &DenseMatrix, k: usize, metric: Metric) -> Result<f64> {
    let n = x.rows();
    if coords.rows() != n {
        return Err(Error::invalid(format!("{} layout rows for {n} feature rows", coords.rows())));
    }
    check_k(n, k)?;
    x.ensure_finite()?;
    coords.ensure_finite()?;
    let denom = max_penalty(n, k);
    if denom == 0.0 {
        return Ok(1.0);
    }

    let penalties = map_rows(n, |i| {
        let mut rank = alloc::vec![0usize; n];
        for (r, (_, j)) in nearest_rows(x, x.row(i), n - 1, metric, Some(i)).into_iter().enumerate() {
            rank[j] = r + 1;
        }
        nearest_rows(coords, coords.row(i), k, Metric::Euclidean, Some(i))
            .into_iter()
            .map(|(_, j)| rank[j].saturating_sub(k) as f64)
            .sum::<f64>()
    });
    let total: f64 = penalties.iter().sum();
    Ok((1.0 - total / (n as f64 * denom)).clamp(0.0, 1.0))
}

/// Mean over points of the fraction of their `k` layout neighbors that
/// carry the same label.
pub fn neighborhood_purity<L: PartialEq + Sync>(coords: &DenseMatrix, labels: &[L], k: usize) -> Result<f64> {
    let n = coords.rows();
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} points", labels.len())));
    }
    check_k(n, k)?;
    coords.ensure_finite()?;
    let fractions = map_rows(n, |i| {
        let same = nearest_rows(coords, coords.row(i), k, Metric::Euclidean, Some(i))
            .into_iter()
            .filter(|&(_, j)| labels[j] == labels[i])
            .count();
        same as f64 / k as f64
    });
    Ok(fractions.iter().sum::<f64>() / n as f64)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Vertices of the 2-D convex hull in counter-clockwise order (Andrew's
/// monotone chain). Collinear points are dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &[f64; 2]> =
            if pass == 0 { &mut pts.iter() } else { &mut pts.iter().rev() };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Area spanned by the rows of `coords`: convex hull area in two
/// dimensions, range length in one, and bounding-box volume above two
/// (an upper bound on the hull volume).
pub fn occupied_area(coords: &DenseMatrix) -> f64 {
    if coords.rows() == 0 {
        return 0.0;
    }
    if coords.cols() == 2 {
        let pts: Vec<[f64; 2]> = coords.iter_rows().map(|r| [r[0], r[1]]).collect();
        let hull = convex_hull(&pts);
        if hull.len() < 3 {
            return 0.0;
        }
        let twice: f64 = (0..hull.len())
            .map(|i| {
                let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        return twice.abs() / 2.0;
    }
    (0..coords.cols())
        .map(|c| {
            let (lo, hi) = coords
                .iter_rows()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[c]), hi.max(r[c])));
            hi - lo
        })
        .product()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Distance from each row of `query` to its nearest row of `reference`.
pub fn nearest_distances(reference: &DenseMatrix, query: &DenseMatrix) -> Vec<f64> {
    map_rows(query.rows(), |i| {
        reference
            .iter_rows()
            .map(|r| Metric::Euclidean.distance(query.row(i), r))
            .min_by(f64::total_cmp)
            .unwrap_or(0.0)
    })
}

/// Mean distance from each reference row to its nearest other reference row.
pub fn reference_spacing(reference: &DenseMatrix) -> f64 {
    let n = reference.rows();
    if n < 2 {
        return 0.0;
    }
    let d = map_rows(n, |i| nearest_rows(reference, reference.row(i), 1, Metric::Euclidean, Some(i))[0].0);
    mean(&d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAlignment {
    pub count: usize,
    pub mean_nearest: f64,
    pub median_nearest: f64,
    pub overlap_ratio: Option<f64>,
    pub area_ratio: Option<f64>,
}

/// How a projection sits relative to the reference layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub projected: usize,
    /// Layout distance from each projected point to its nearest reference
    /// point, summarized.
    pub mean_nearest: f64,
    pub median_nearest: f64,
    /// Mean nearest-neighbor distance within the reference layout.
    pub baseline: f64,
    /// `mean_nearest / baseline`; `None` when the baseline is zero.
    pub overlap_ratio: Option<f64>,
    pub projected_area: f64,
    pub reference_area: f64,
    /// `projected_area / reference_area`; `None` when the reference is flat.
    pub area_ratio: Option<f64>,
    pub groups: BTreeMap<String, GroupAlignment>,
}

/// Compares `projected` against `reference`, optionally broken down by a
/// per-projected-point label.
pub fn alignment<L: AsRef<str>>(
    reference: &DenseMatrix,
    projected: &DenseMatrix,
    labels: Option<&[L]>,
) -> Result<AlignmentReport> {
    if projected.rows() == 0 {
        return Err(Error::invalid("alignment needs at least one projected point"));
    }
    if reference.rows() == 0 {
        return Err(Error::invalid("alignment needs a non-empty reference layout"));
    }
    if projected.cols() != reference.cols() {
        return Err(Error::DimensionMismatch { expected: reference.cols(), found: projected.cols() });
    }
    reference.ensure_finite()?;
    projected.ensure_finite()?;

    let nearest = nearest_distances(reference, projected);
    let baseline = reference_spacing(reference);
    let reference_area = occupied_area(reference);
    let projected_area = occupied_area(projected);

    let mut groups = BTreeMap::new();
    if let Some(labels) = labels {
        if labels.len() != projected.rows() {
            return Err(Error::invalid(format!(
                "{} labels for {} projected points",
                labels.len(),
                projected.rows()
            )));
        }
        let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            members.entry(l.as_ref()).or_default().push(i);
        }
        for (label, rows) in members {
            let d: Vec<f64> = rows.iter().map(|&i| nearest[i]).collect();
            let sub: Vec<&[f64]> = rows.iter().map(|&i| projected.row(i)).collect();
            let area = occupied_area(&DenseMatrix::from_rows(&sub)?);
            groups.insert(
                String::from(label),
                GroupAlignment {
                    count: rows.len(),
                    mean_nearest: mean(&d),
                    median_nearest: median(&d),
                    overlap_ratio: ratio(mean(&d), baseline),
                    area_ratio: ratio(area, reference_area),
                },
            );
        }
    }

    let mean_nearest = mean(&nearest);
    Ok(AlignmentReport {
        projected: projected.rows(),
        mean_nearest,
        median_nearest: median(&nearest),
        baseline,
        overlap_ratio: ratio(mean_nearest, baseline),
        projected_area,
        reference_area,
        area_ratio: ratio(projected_area, reference_area),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layout_is_trustworthy() {
        let x = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.2], [3.0, 1.0], [0.5, 4.0], [2.2, 2.0], [5.0, 0.1]])
            .unwrap();
        assert_eq!(trustworthiness(&x, &x, 2, Metric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn two_points_one_neighbor() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let y = DenseMatrix::from_rows(&[[5.0], [-3.0]]).unwrap();
        assert_eq!(trustworthiness(&x, &y, 1, Metric::Euclidean).unwrap(), 1.0);
        assert!(trustworthiness(&x, &y, 2, Metric::Euclidean).is_err());
    }

    #[test]
    fn normalizer_matches_closed_form() {
        for (n, k) in [(100, 10), (50, 5), (9, 4)] {
            assert_eq!(max_penalty(n, k), (k * (2 * n - 3 * k - 1)) as f64 / 2.0);
        }
        assert_eq!(max_penalty(4, 3), 0.0);
    }

    #[test]
    fn separated_groups_are_pure() {
        let c = DenseMatrix::from_rows(&[[0.0], [0.1], [0.2], [0.3], [100.0], [100.1], [100.2], [100.3]]).unwrap();
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b"];
        assert_eq!(neighborhood_purity(&c, &labels, 3).unwrap(), 1.0);
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, 1.0], [1.0, 0.0]];
        assert_eq!(convex_hull(&pts).len(), 4);
        let m = DenseMatrix::from_rows(&pts).unwrap();
        assert!((occupied_area(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_projection() {
        let r = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let same = alignment::<&str>(&r, &r, None).unwrap();
        assert_eq!(same.overlap_ratio, Some(0.0));
        let pile = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let report = alignment(&r, &pile, Some(&["D", "R", "D"])).unwrap();
        assert_eq!(report.area_ratio, Some(0.0));
        assert_eq!(report.groups["D"].count, 2);
        let empty = DenseMatrix::zeros(0, 2);
        assert!(alignment::<&str>(&r, &empty, None).is_err());
    }
}
