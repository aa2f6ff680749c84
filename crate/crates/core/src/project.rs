//! Placement of new points onto a frozen layout.
//!
//! Each new point is attached to its `k` nearest reference points in
//! feature space with smoothed memberships calibrated exactly as in the
//! fit, starts at the membership-weighted mean of those neighbors'
//! coordinates, and is refined by a short SGD run in which only the new
//! point moves. Points are independent of each other, so the result does
//! not depend on which other points are projected alongside it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fuzzy_graph::{calibrate_sigma, smoothed_membership};
use crate::neighbors::nearest_rows;
use crate::optimizer::{run_against_reference, EdgeSchedule};
use crate::{CalibrationOptions, DenseMatrix, Error, LowDimKernel, Metric, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub k: usize,
    pub metric: Metric,
    pub transform_epochs: usize,
    pub learning_rate: f64,
    pub neg_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub calibration: CalibrationOptions,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            k: 15,
            metric: Metric::Euclidean,
            transform_epochs: 30,
            learning_rate: 0.25,
            neg_samples: 5,
            seed: 0,
            calibration: CalibrationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: DenseMatrix,
    /// Coordinates before refinement.
    pub initial_coords: DenseMatrix,
    /// Reference neighbors of each new point in feature space, row-major
    /// `k` per point.
    pub neighbor_ids: Vec<usize>,
    pub neighbor_dists: Vec<f64>,
    /// Number of points whose calibration hit a bandwidth bound.
    pub clamped: usize,
}

impl Projection {
    pub fn neighbors(&self, i: usize, k: usize) -> (&[usize], &[f64]) {
        (&self.neighbor_ids[i * k..(i + 1) * k], &self.neighbor_dists[i * k..(i + 1) * k])
    }
}

struct Placed {
    coords: Vec<f64>,
    initial: Vec<f64>,
    ids: Vec<usize>,
    dists: Vec<f64>,
    clamped: bool,
}

/// FNV-1a over the row's bit patterns: the random stream of a new point
/// depends on its features, not on its position in the batch.
fn stream_for(row: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in row {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn place_one(
    train_x: &DenseMatrix,
    train_y: &DenseMatrix,
    kernel: &LowDimKernel,
    query: &[f64],
    params: &ProjectionParams,
) -> Result<Placed> {
    let dims = train_y.cols();
    let near = nearest_rows(train_x, query, params.k, params.metric, None);
    let dists: Vec<f64> = near.iter().map(|&(d, _)| d).collect();
    let ids: Vec<usize> = near.iter().map(|&(_, j)| j).collect();

    let (memberships, clamped) = if dists.len() < 2 {
        (alloc::vec![1.0; dists.len()], false)
    } else {
        let target = params.calibration.target_for(params.k);
        let cal = calibrate_sigma(&dists, target, params.calibration.tol, params.calibration.max_iter)?;
        let m = dists.iter().map(|&d| smoothed_membership(d, cal.rho, cal.sigma)).collect();
        (m, cal.clamped)
    };

    let total: f64 = memberships.iter().sum();
    let mut initial = alloc::vec![0.0; dims];
    for (&j, &v) in ids.iter().zip(&memberships) {
        for (acc, &y) in initial.iter_mut().zip(train_y.row(j)) {
            *acc += v * y;
        }
    }
    for acc in initial.iter_mut() {
        *acc /= total;
    }

    // A training point is pulled along each edge twice per epoch, as head
    // and as tail, but repelled once; a projected point is only ever a
    // head, so it gets half the negative rate to keep the same balance.
    let neg_rate = params.neg_samples as f64 / 2.0;
    let mut edges: Vec<EdgeSchedule> = ids
        .iter()
        .zip(&memberships)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&j, &v)| EdgeSchedule::new(0, j, v, neg_rate))
        .collect();
    let mut coords = initial.clone();
    let mut rng = crate::rng_from(params.seed, stream_for(query));
    run_against_reference(
        &mut coords,
        train_y.as_slice(),
        &mut edges,
        kernel,
        dims,
        params.transform_epochs,
        params.learning_rate,
        &mut rng,
    )?;
    Ok(Placed { coords, initial, ids, dists, clamped })
}

/// Projects the rows of `new_x` onto the layout `train_y` of `train_x`.
///
/// The reference layout is never modified; new points do not interact.
pub fn project(
    train_x: &DenseMatrix,
    train_y: &DenseMatrix,
    kernel: &LowDimKernel,
    new_x: &DenseMatrix,
    params: &ProjectionParams,
) -> Result<Projection> {
    if train_x.rows() != train_y.rows() {
        return Err(Error::invalid(alloc::format!(
            "{} reference rows but {} layout rows",
            train_x.rows(),
            train_y.rows()
        )));
    }
    if new_x.cols() != train_x.cols() {
        return Err(Error::DimensionMismatch { expected: train_x.cols(), found: new_x.cols() });
    }
    if params.k == 0 || params.k > train_x.rows() {
        return Err(Error::invalid(alloc::format!(
            "k must satisfy 1 <= k <= {} reference points (k = {})",
            train_x.rows(),
            params.k
        )));
    }
    if params.neg_samples == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::invalid("projection needs neg_samples >= 1 and a positive learning rate"));
    }
    train_x.ensure_finite()?;
    train_y.ensure_finite()?;
    new_x.ensure_finite()?;

    let m = new_x.rows();
    let one = |i: usize| place_one(train_x, train_y, kernel, new_x.row(i), params);

    #[cfg(feature = "parallel")]
    let placed: Vec<Placed> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let placed: Vec<Placed> = (0..m).map(one).collect::<Result<_>>()?;

    let dims = train_y.cols();
    let mut coords = Vec::with_capacity(m * dims);
    let mut initial = Vec::with_capacity(m * dims);
    let mut neighbor_ids = Vec::with_capacity(m * params.k);
    let mut neighbor_dists = Vec::with_capacity(m * params.k);
    let mut clamped = 0;
    for p in placed {
        coords.extend(p.coords);
        initial.extend(p.initial);
        neighbor_ids.extend(p.ids);
        neighbor_dists.extend(p.dists);
        clamped += usize::from(p.clamped);
    }
    Ok(Projection {
        coords: DenseMatrix::new(m, dims, coords)?,
        initial_coords: DenseMatrix::new(m, dims, initial)?,
        neighbor_ids,
        neighbor_dists,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> (DenseMatrix, DenseMatrix) {
        let x: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        let y: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, 0.0]).collect();
        (DenseMatrix::from_rows(&x).unwrap(), DenseMatrix::from_rows(&y).unwrap())
    }

    #[test]
    fn reference_layout_is_untouched_and_points_are_independent() {
        let (x, y) = line(30);
        let kernel = crate::fit_kernel(0.1, 1.0).unwrap();
        let params = ProjectionParams { k: 5, ..Default::default() };
        let new = DenseMatrix::from_rows(&[[3.5], [20.2], [11.0]]).unwrap();
        let before = y.clone();
        let all = project(&x, &y, &kernel, &new, &params).unwrap();
        assert_eq!(y, before);
        let single = DenseMatrix::from_rows(&[[20.2]]).unwrap();
        let alone = project(&x, &y, &kernel, &single, &params).unwrap();
        assert_eq!(alone.coords.row(0), all.coords.row(1));
    }

    #[test]
    fn lands_near_feature_neighbors() {
        let (x, y) = line(40);
        let kernel = crate::fit_kernel(0.1, 1.0).unwrap();
        let params = ProjectionParams { k: 5, ..Default::default() };
        let new = DenseMatrix::from_rows(&[[12.0], [33.0]]).unwrap();
        let p = project(&x, &y, &kernel, &new, &params).unwrap();
        assert!((p.initial_coords.get(0, 0) - 12.0).abs() < 1.0);
        assert!((p.coords.get(1, 0) - 33.0).abs() < 3.0);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (x, y) = line(10);
        let kernel = crate::fit_kernel(0.1, 1.0).unwrap();
        let wide = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let params = ProjectionParams { k: 3, ..Default::default() };
        assert!(matches!(
            project(&x, &y, &kernel, &wide, &params),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
        let too_many = ProjectionParams { k: 11, ..Default::default() };
        let ok = DenseMatrix::from_rows(&[[1.0]]).unwrap();
        assert!(project(&x, &y, &kernel, &ok, &too_many).is_err());
    }
}
