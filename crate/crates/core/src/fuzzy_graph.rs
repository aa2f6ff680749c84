//! Fuzzy membership graph built from a kNN graph.
//!
//! Each point `i` gets a local scale: `rho_i` is the distance to its nearest
//! neighbor and `sigma_i` is chosen so that the smoothed memberships
//! `exp(-max(0, d_ij - rho_i) / sigma_i)` over its `k` neighbors sum to a
//! fixed target (`log2 k` by default). The nearest neighbor therefore always
//! has membership 1.
//!
//! The directed memberships are combined with the probabilistic t-conorm
//! `a + b - a*b`, giving a symmetric graph whose edges are stored once with
//! `i < j`.
//!
//! Note the kernel subtracts `rho`. Reading the exponent as `(-d - rho)`
//! would give memberships strictly below 1 at the nearest neighbor, which
//! defeats the purpose of `rho`.

use alloc::{format, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::{math, Error, NeighborGraph, Result};

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Target membership mass per point. `None` means `log2(k)`.
    pub target: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target: None,
            tol: 1e-5,
            max_iter: 64,
        }
    }
}

impl CalibrationOptions {
    pub fn target_for(&self, k: usize) -> f64 {
        self.target.unwrap_or_else(|| math::log2(k as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub rho: f64,
    pub sigma: f64,
    /// `sigma` sits on a bound because the target cannot be reached.
    pub clamped: bool,
    /// `membership_sum(sigma) - target`.
    pub residual: f64,
}

/// Sum of smoothed memberships for one point's sorted neighbor distances.
pub fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|&d| math::exp(-(d - rho).max(0.0) / sigma)).sum()
}

/// Solves for `sigma` by bisection on a log scale over
/// `[SIGMA_MIN, SIGMA_MAX]`. The sum is non-decreasing in `sigma`; when the
/// target is already met (or exceeded) at the lower bound, or cannot be
/// reached at the upper one, `sigma` is pinned to that bound and `clamped`
/// is set.
pub fn calibrate_sigma(dists: &[f64], target: f64, tol: f64, max_iter: usize) -> Result<Calibration> {
    if dists.len() < 2 {
        return Err(Error::invalid("calibration needs at least two neighbor distances"));
    }
    if !(target > 0.0) {
        return Err(Error::invalid(format!("calibration target must be positive, got {target}")));
    }
    if let Some(row) = dists.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite { row });
    }
    if dists.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("neighbor distances must be sorted ascending"));
    }

    let rho = dists[0];
    let at = |sigma: f64| membership_sum(dists, rho, sigma) - target;

    let low = at(SIGMA_MIN);
    if low >= -tol {
        return Ok(Calibration { rho, sigma: SIGMA_MIN, clamped: true, residual: low });
    }
    let high = at(SIGMA_MAX);
    if high <= tol {
        return Ok(Calibration { rho, sigma: SIGMA_MAX, clamped: true, residual: high });
    }

    let (mut lo, mut hi) = (math::ln(SIGMA_MIN), math::ln(SIGMA_MAX));
    let mut sigma = math::exp(0.5 * (lo + hi));
    let mut residual = at(sigma);
    for _ in 0..max_iter {
        if residual.abs() <= tol {
            break;
        }
        if residual > 0.0 {
            hi = math::ln(sigma);
        } else {
            lo = math::ln(sigma);
        }
        sigma = math::exp(0.5 * (lo + hi));
        residual = at(sigma);
    }
    Ok(Calibration { rho, sigma, clamped: false, residual })
}

/// Directed memberships `v_{j|i}` laid out like the kNN graph (n x k).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedStrengths {
    pub k: usize,
    pub ids: Vec<usize>,
    pub strengths: Vec<f64>,
}

impl DirectedStrengths {
    pub fn n(&self) -> usize {
        self.ids.len() / self.k
    }

    /// `v_{j|i}`; zero when `j` is not among `i`'s neighbors.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = i * self.k..(i + 1) * self.k;
        self.ids[row.clone()]
            .iter()
            .position(|&x| x == j)
            .map_or(0.0, |p| self.strengths[row.start + p])
    }
}

#[inline]
pub fn smoothed_membership(d: f64, rho: f64, sigma: f64) -> f64 {
    math::exp(-(d - rho).max(0.0) / sigma)
}

pub fn local_strengths(graph: &NeighborGraph, calibrations: &[Calibration]) -> Result<DirectedStrengths> {
    let n = graph.n();
    if calibrations.len() != n {
        return Err(Error::invalid(format!(
            "{} calibrations for {n} points",
            calibrations.len()
        )));
    }
    let mut ids = Vec::with_capacity(n * graph.k);
    let mut strengths = Vec::with_capacity(n * graph.k);
    for (i, c) in calibrations.iter().enumerate() {
        ids.extend_from_slice(graph.ids(i));
        strengths.extend(graph.dists(i).iter().map(|&d| smoothed_membership(d, c.rho, c.sigma)));
    }
    Ok(DirectedStrengths { k: graph.k, ids, strengths })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Symmetric fuzzy graph; `edges` holds each pair once with `i < j`,
/// sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFuzzyGraph")]
pub struct FuzzyGraph {
    pub n: usize,
    edges: Vec<Edge>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub clamped: Vec<bool>,
    pub target: f64,
}

#[derive(Deserialize)]
struct RawFuzzyGraph {
    n: usize,
    edges: Vec<Edge>,
    rho: Vec<f64>,
    sigma: Vec<f64>,
    clamped: Vec<bool>,
    target: f64,
}

impl TryFrom<RawFuzzyGraph> for FuzzyGraph {
    type Error = Error;

    fn try_from(raw: RawFuzzyGraph) -> Result<Self> {
        FuzzyGraph::from_edges(raw.n, raw.edges, raw.rho, raw.sigma, raw.clamped, raw.target)
    }
}

/// Row-compressed view of both directions of every edge.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Adjacency {
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[r.clone()], &self.weights[r])
    }
}

impl FuzzyGraph {
    /// Assembles a graph from upper-triangle edges (any order). Used when
    /// reloading persisted graphs.
    pub fn from_edges(
        n: usize,
        mut edges: Vec<Edge>,
        rho: Vec<f64>,
        sigma: Vec<f64>,
        clamped: Vec<bool>,
        target: f64,
    ) -> Result<Self> {
        if rho.len() != n || sigma.len() != n || clamped.len() != n {
            return Err(Error::invalid("per-point arrays do not match n"));
        }
        for e in &edges {
            if !(e.i < e.j && e.j < n) || !(e.weight > 0.0 && e.weight <= 1.0) {
                return Err(Error::invalid(format!("invalid edge ({}, {}, {})", e.i, e.j, e.weight)));
            }
        }
        edges.sort_unstable_by_key(|a| (a.i, a.j));
        if edges.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::invalid("duplicate edge"));
        }
        Ok(Self { n, edges, rho, sigma, clamped, target })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `v_ij`, read symmetrically; zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .map_or(0.0, |p| self.edges[p].weight)
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut degree = alloc::vec![0usize; self.n + 1];
        for e in &self.edges {
            degree[e.i + 1] += 1;
            degree[e.j + 1] += 1;
        }
        for i in 0..self.n {
            degree[i + 1] += degree[i];
        }
        let offsets = degree.clone();
        let mut fill = degree;
        let mut targets = alloc::vec![0; 2 * self.edges.len()];
        let mut weights = alloc::vec![0.0; 2 * self.edges.len()];
        // Edges are sorted by (i, j), so each row ends up sorted by target.
        let mut place = |from: usize, to: usize, w: f64| {
            targets[fill[from]] = to;
            weights[fill[from]] = w;
            fill[from] += 1;
        };
        for e in &self.edges {
            place(e.j, e.i, e.weight);
        }
        for e in &self.edges {
            place(e.i, e.j, e.weight);
        }
        Adjacency { offsets, targets, weights }
    }
}

/// Fuzzy union of directed memberships: `v_ij = a + b - a*b`.
pub fn symmetrize(directed: &DirectedStrengths) -> Vec<Edge> {
    let k = directed.k;
    // (lo, hi, membership, lo->hi?)
    let mut halves: Vec<(usize, usize, f64, bool)> = Vec::with_capacity(directed.ids.len());
    for (idx, (&j, &v)) in directed.ids.iter().zip(&directed.strengths).enumerate() {
        let i = idx / k;
        if i == j || v <= 0.0 {
            continue;
        }
        halves.push((i.min(j), i.max(j), v, i < j));
    }
    halves.sort_unstable_by_key(|a| (a.0, a.1, a.3));

    let mut edges = Vec::with_capacity(halves.len());
    let mut p = 0;
    while p < halves.len() {
        let (i, j, a, _) = halves[p];
        let mut weight = a;
        if p + 1 < halves.len() && (halves[p + 1].0, halves[p + 1].1) == (i, j) {
            let b = halves[p + 1].2;
            weight = a + b - a * b;
            p += 1;
        }
        p += 1;
        if weight > 0.0 {
            edges.push(Edge { i, j, weight: weight.min(1.0) });
        }
    }
    edges
}

/// Calibrates every point, computes directed memberships and symmetrizes.
pub fn build_fuzzy_graph(graph: &NeighborGraph, options: &CalibrationOptions) -> Result<FuzzyGraph> {
    let n = graph.n();
    let target = options.target_for(graph.k);
    let calibrate = |i: usize| calibrate_sigma(graph.dists(i), target, options.tol, options.max_iter);

    #[cfg(feature = "parallel")]
    let calibrations: Vec<Calibration> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(calibrate).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let calibrations: Vec<Calibration> = (0..n).map(calibrate).collect::<Result<_>>()?;

    let directed = local_strengths(graph, &calibrations)?;
    let edges = symmetrize(&directed);
    Ok(FuzzyGraph {
        n,
        edges,
        rho: calibrations.iter().map(|c| c.rho).collect(),
        sigma: calibrations.iter().map(|c| c.sigma).collect(),
        clamped: calibrations.iter().map(|c| c.clamped).collect(),
        target,
    })
}
