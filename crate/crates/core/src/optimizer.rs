//! Cross-entropy layout optimization.
//!
//! The objective over ordered pairs `i != j` is
//!
//! ```text
//! sum  v_ij ln(v_ij / w_ij) + (1 - v_ij) ln((1 - v_ij) / (1 - w_ij))
//! ```
//!
//! with `v` the fuzzy graph and `w` the low-dimensional kernel. It is
//! minimized by SGD: each directed edge is visited every `1 / v_ij` epochs
//! and pulls its endpoints together (the `v ln w` term); every visit also
//! draws `neg_samples` uniform points that push the head away (a sampled
//! stand-in for the `(1 - v) ln(1 - w)` term over all non-edges).

use alloc::vec::Vec;
use core::cell::Cell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{math, DenseMatrix, Error, FuzzyGraph, InitMethod, LowDimKernel, Result};

/// Per-coordinate bound on a single gradient step.
pub const GRADIENT_CLIP: f64 = 4.0;
/// Clamp applied inside every logarithm of the loss.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Single-threaded, bit-reproducible for a given seed.
    #[default]
    Deterministic,
    /// Lock-free asynchronous updates over edge partitions. Races on
    /// coordinates are tolerated; results vary run to run. Falls back to
    /// `Deterministic` without the `parallel` feature.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dims: usize,
    pub n_epochs: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub initial_lr: f64,
    pub neg_samples: usize,
    pub seed: u64,
    pub init: InitMethod,
    #[serde(default)]
    pub mode: ExecutionMode,
    /// Record a sampled loss every this many epochs; 0 disables the trace.
    #[serde(default)]
    pub trace_every: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dims: 2,
            n_epochs: 450,
            min_dist: 0.1,
            spread: 1.0,
            initial_lr: 1.0,
            neg_samples: 5,
            seed: 0,
            init: InitMethod::Spectral,
            mode: ExecutionMode::Deterministic,
            trace_every: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.dims) {
            return Err(Error::invalid(alloc::format!("dims must be in 1..=10, got {}", self.dims)));
        }
        if !(self.min_dist > 0.0 && self.min_dist <= self.spread) {
            return Err(Error::invalid("min_dist must satisfy 0 < min_dist <= spread"));
        }
        if self.neg_samples == 0 {
            return Err(Error::invalid("neg_samples must be at least 1"));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::invalid("initial_lr must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: DenseMatrix,
    pub config: EmbeddingConfig,
    pub final_loss: f64,
    /// `(epoch, sampled loss)` pairs when tracing is enabled.
    #[serde(default)]
    pub loss_trace: Vec<(usize, f64)>,
}

/// How [`cross_entropy`] treats pairs that are not graph edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeTerm {
    /// Every ordered pair, O(n^2).
    Exact,
    /// Mean over `samples` uniform non-edge ordered pairs, scaled by their
    /// count.
    Sampled { samples: usize, seed: u64 },
}

impl NegativeTerm {
    /// Exact up to a few million ordered pairs, sampled beyond.
    pub fn auto(n: usize, seed: u64) -> Self {
        if n.saturating_mul(n) <= 4_000_000 {
            NegativeTerm::Exact
        } else {
            NegativeTerm::Sampled { samples: 1_000_000, seed }
        }
    }
}

/// Loss of one ordered pair, each log argument clamped below at
/// [`LOSS_EPSILON`].
#[inline]
pub fn pair_loss(v: f64, w: f64) -> f64 {
    let e = LOSS_EPSILON;
    let attract = if v > 0.0 { v * math::ln(v.max(e) / w.max(e)) } else { 0.0 };
    let u = 1.0 - v;
    let repel = if u > 0.0 { u * math::ln(u.max(e) / (1.0 - w).max(e)) } else { 0.0 };
    attract + repel
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_coords(graph: &FuzzyGraph, coords: &DenseMatrix) -> Result<()> {
    if coords.rows() != graph.n {
        return Err(Error::invalid(alloc::format!(
            "{} coordinate rows for a graph of {} points",
            coords.rows(),
            graph.n
        )));
    }
    coords.ensure_finite()
}

/// Fuzzy cross-entropy of `coords` against `graph`, summed over ordered
/// pairs.
pub fn cross_entropy(
    graph: &FuzzyGraph,
    coords: &DenseMatrix,
    kernel: &LowDimKernel,
    negative: NegativeTerm,
) -> Result<f64> {
    check_coords(graph, coords)?;
    let n = graph.n;
    let adj = graph.adjacency();
    match negative {
        NegativeTerm::Exact => {
            let mut total = 0.0;
            for i in 0..n {
                let (targets, weights) = adj.row(i);
                let mut p = 0;
                let yi = coords.row(i);
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let v = if p < targets.len() && targets[p] == j {
                        p += 1;
                        weights[p - 1]
                    } else {
                        0.0
                    };
                    let w = kernel.weight_sq(dist_sq(yi, coords.row(j)));
                    total += pair_loss(v, w);
                }
            }
            Ok(total)
        }
        NegativeTerm::Sampled { samples, seed } => {
            let mut total = 0.0;
            for e in graph.edges() {
                let w = kernel.weight_sq(dist_sq(coords.row(e.i), coords.row(e.j)));
                total += 2.0 * pair_loss(e.weight, w);
            }
            let non_edges = (n * n.saturating_sub(1)).saturating_sub(2 * graph.edges().len());
            if non_edges == 0 || samples == 0 {
                return Ok(total);
            }
            let mut rng = crate::rng_from(seed, 0x6c6f_7373);
            let (mut acc, mut taken, mut draws) = (0.0, 0usize, 0usize);
            while taken < samples && draws < samples.saturating_mul(4) {
                draws += 1;
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j || graph.weight(i, j) > 0.0 {
                    continue;
                }
                acc += pair_loss(0.0, kernel.weight_sq(dist_sq(coords.row(i), coords.row(j))));
                taken += 1;
            }
            if taken > 0 {
                total += acc / taken as f64 * non_edges as f64;
            }
            Ok(total)
        }
    }
}

/// Gradient of one ordered pair's loss with respect to `y_i`, written to
/// `out`. Unclipped; infinite when `y_i == y_j` and `v < 1`.
pub fn pair_gradient(yi: &[f64], yj: &[f64], v: f64, kernel: &LowDimKernel, out: &mut [f64]) {
    let s = dist_sq(yi, yj);
    let mut coeff = v * kernel.attraction(s);
    if v < 1.0 {
        coeff -= (1.0 - v) * kernel.repulsion(s);
    }
    for ((o, a), b) in out.iter_mut().zip(yi).zip(yj) {
        *o = coeff * (a - b);
    }
}

#[inline]
fn clip(g: f64) -> f64 {
    g.clamp(-GRADIENT_CLIP, GRADIENT_CLIP)
}

/// Flat coordinate storage addressable through `&self`.
trait Cells: Sync {
    fn get(&self, k: usize) -> f64;
    fn set(&self, k: usize, v: f64);
}

struct Serial<'a>(&'a [Cell<f64>]);

// Only ever touched from one thread; `Sync` is needed for the trait bound.
unsafe impl Sync for Serial<'_> {}

impl Cells for Serial<'_> {
    #[inline]
    fn get(&self, k: usize) -> f64 {
        self.0[k].get()
    }
    #[inline]
    fn set(&self, k: usize, v: f64) {
        self.0[k].set(v)
    }
}

/// Read-only coordinates (the frozen reference layout during projection).
struct Frozen<'a>(&'a [f64]);

impl Cells for Frozen<'_> {
    #[inline]
    fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
    #[inline]
    fn set(&self, _: usize, _: f64) {
        debug_assert!(false, "frozen coordinates are never written");
    }
}

#[cfg(feature = "parallel")]
struct Shared<'a>(&'a [core::sync::atomic::AtomicU64]);

#[cfg(feature = "parallel")]
impl Cells for Shared<'_> {
    #[inline]
    fn get(&self, k: usize) -> f64 {
        f64::from_bits(self.0[k].load(core::sync::atomic::Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, k: usize, v: f64) {
        self.0[k].store(v.to_bits(), core::sync::atomic::Ordering::Relaxed)
    }
}

/// Sampling bookkeeping for one directed edge.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeSchedule {
    pub head: usize,
    pub tail: usize,
    pub every: f64,
    pub next: f64,
    pub neg_every: f64,
    pub next_neg: f64,
}

impl EdgeSchedule {
    /// `neg_rate` negative samples per attractive update.
    pub(crate) fn new(head: usize, tail: usize, v: f64, neg_rate: f64) -> Self {
        let every = 1.0 / v;
        let neg_every = every / neg_rate;
        Self { head, tail, every, next: every, neg_every, next_neg: neg_every }
    }
}

#[derive(Clone, Copy)]
struct StepContext<'k> {
    kernel: &'k LowDimKernel,
    dims: usize,
    alpha: f64,
    epoch: usize,
    /// Negative samples are drawn from `0..negative_pool` of the tail set.
    negative_pool: usize,
    /// Heads and tails share storage: the attractive step moves both ends
    /// and a head never repels itself.
    in_place: bool,
}

/// Applies one epoch's worth of updates for a single directed edge.
/// Indices handed to the cells are `point * dims + axis`.
#[inline]
fn step_edge<H: Cells + ?Sized, T: Cells + ?Sized, R: Rng>(
    heads: &H,
    tails: &T,
    edge: &mut EdgeSchedule,
    ctx: &StepContext<'_>,
    rng: &mut R,
) -> Result<()> {
    let epoch = ctx.epoch as f64;
    if edge.next > epoch {
        return Ok(());
    }
    let d = ctx.dims;
    let (h, t) = (edge.head * d, edge.tail * d);
    let mut s = 0.0;
    for a in 0..d {
        let diff = heads.get(h + a) - tails.get(t + a);
        s += diff * diff;
    }
    let coeff = ctx.kernel.attraction(s);
    for a in 0..d {
        let yi = heads.get(h + a);
        let yj = tails.get(t + a);
        let g = coeff * (yi - yj);
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { head: edge.head, tail: edge.tail, epoch: ctx.epoch });
        }
        let g = clip(g);
        heads.set(h + a, yi - ctx.alpha * g);
        if ctx.in_place {
            tails.set(t + a, yj + ctx.alpha * g);
        }
    }
    edge.next += edge.every;

    let n_neg = math::floor((epoch - edge.next_neg) / edge.neg_every).max(0.0) as usize;
    for _ in 0..n_neg {
        let other = rng.random_range(0..ctx.negative_pool);
        if ctx.in_place && other == edge.head {
            continue;
        }
        let o = other * d;
        let mut s = 0.0;
        for a in 0..d {
            let diff = heads.get(h + a) - tails.get(o + a);
            s += diff * diff;
        }
        if s > 0.0 {
            let coeff = ctx.kernel.repulsion(s);
            for a in 0..d {
                let yi = heads.get(h + a);
                let g = coeff * (yi - tails.get(o + a));
                if g.is_nan() {
                    return Err(Error::NonFiniteGradient { head: edge.head, tail: other, epoch: ctx.epoch });
                }
                heads.set(h + a, yi + ctx.alpha * clip(g));
            }
        } else {
            for a in 0..d {
                heads.set(h + a, heads.get(h + a) + ctx.alpha * GRADIENT_CLIP);
            }
        }
    }
    edge.next_neg += n_neg as f64 * edge.neg_every;
    Ok(())
}

/// Called after each epoch with the epoch number and the current layout.
type EpochHook<'a> = &'a mut dyn FnMut(usize, &[f64]);

#[inline]
fn learning_rate(initial: f64, epoch: usize, n_epochs: usize) -> f64 {
    initial * (1.0 - (epoch - 1) as f64 / n_epochs as f64)
}

/// Optimizes a layout in place: heads, tails and negatives all index `data`.
fn run_in_place(
    data: &mut [f64],
    edges: &mut [EdgeSchedule],
    kernel: &LowDimKernel,
    config: &EmbeddingConfig,
    n: usize,
    mut on_epoch: Option<EpochHook<'_>>,
) -> Result<()> {
    let mut rng = crate::rng_from(config.seed, 0x7367_6400);
    for epoch in 1..=config.n_epochs {
        let ctx = StepContext {
            kernel,
            dims: config.dims,
            alpha: learning_rate(config.initial_lr, epoch, config.n_epochs),
            epoch,
            negative_pool: n,
            in_place: true,
        };
        {
            let cells = Serial(Cell::from_mut(&mut *data).as_slice_of_cells());
            for edge in edges.iter_mut() {
                step_edge(&cells, &cells, edge, &ctx, &mut rng)?;
            }
        }
        if let Some(f) = on_epoch.as_mut() {
            f(epoch, data);
        }
    }
    Ok(())
}

/// Moves the points in `moving` (point-major, `dims` per point) against
/// the frozen `reference` layout. Edge heads index `moving`, tails and
/// negative samples index `reference`.
pub(crate) fn run_against_reference(
    moving: &mut [f64],
    reference: &[f64],
    edges: &mut [EdgeSchedule],
    kernel: &LowDimKernel,
    dims: usize,
    n_epochs: usize,
    initial_lr: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    let pool = reference.len() / dims;
    let frozen = Frozen(reference);
    let cells = Serial(Cell::from_mut(moving).as_slice_of_cells());
    for epoch in 1..=n_epochs {
        let ctx = StepContext {
            kernel,
            dims,
            alpha: learning_rate(initial_lr, epoch, n_epochs),
            epoch,
            negative_pool: pool,
            in_place: false,
        };
        for edge in edges.iter_mut() {
            step_edge(&cells, &frozen, edge, &ctx, rng)?;
        }
    }
    Ok(())
}

fn directed_schedule(graph: &FuzzyGraph, neg_samples: usize) -> Vec<EdgeSchedule> {
    let adj = graph.adjacency();
    let mut out = Vec::with_capacity(adj.targets.len());
    for i in 0..graph.n {
        let (targets, weights) = adj.row(i);
        for (&j, &v) in targets.iter().zip(weights) {
            out.push(EdgeSchedule::new(i, j, v, neg_samples as f64));
        }
    }
    out
}

/// Optimizes `coords` against `graph`. `n_epochs == 0` returns the input
/// layout unchanged.
pub fn optimize(
    graph: &FuzzyGraph,
    coords: DenseMatrix,
    kernel: &LowDimKernel,
    config: &EmbeddingConfig,
) -> Result<Embedding> {
    config.validate()?;
    check_coords(graph, &coords)?;
    if coords.cols() != config.dims {
        return Err(Error::DimensionMismatch { expected: config.dims, found: coords.cols() });
    }
    let n = graph.n;
    let dims = config.dims;
    let mut edges = directed_schedule(graph, config.neg_samples);
    let mut trace = Vec::new();
    let mut data = coords.into_vec();

    let mut trace_loss = |epoch: usize, flat: &[f64]| {
        if epoch % config.trace_every == 0 {
            let m = DenseMatrix::new(n, dims, flat.to_vec()).expect("shape preserved");
            let sampled = NegativeTerm::Sampled { samples: 10 * n, seed: config.seed ^ epoch as u64 };
            if let Ok(loss) = cross_entropy(graph, &m, kernel, sampled) {
                trace.push((epoch, loss));
            }
        }
    };
    let on_epoch: Option<EpochHook<'_>> =
        if config.trace_every > 0 { Some(&mut trace_loss) } else { None };

    if config.n_epochs > 0 && n > 1 {
        match config.mode {
            #[cfg(feature = "parallel")]
            ExecutionMode::Parallel => parallel::run(&mut data, &mut edges, kernel, config, n, on_epoch)?,
            _ => run_in_place(&mut data, &mut edges, kernel, config, n, on_epoch)?,
        }
    }

    let coords = DenseMatrix::new(n, dims, data)?;
    coords.ensure_finite()?;
    let final_loss = cross_entropy(graph, &coords, kernel, NegativeTerm::auto(n, config.seed))?;
    Ok(Embedding { coords, config: config.clone(), final_loss, loss_trace: trace })
}

#[cfg(feature = "parallel")]
mod parallel {
    use super::*;
    use core::sync::atomic::AtomicU64;
    use rayon::prelude::*;

    pub(super) fn run(
        data: &mut [f64],
        edges: &mut [EdgeSchedule],
        kernel: &LowDimKernel,
        config: &EmbeddingConfig,
        n: usize,
        mut on_epoch: Option<EpochHook<'_>>,
    ) -> Result<()> {
        let atoms: Vec<AtomicU64> = data.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        let cells = Shared(&atoms);
        let chunk = edges.len().div_ceil(rayon::current_num_threads() * 4).max(1);
        for epoch in 1..=config.n_epochs {
            let ctx = StepContext {
                kernel,
                dims: config.dims,
                alpha: learning_rate(config.initial_lr, epoch, config.n_epochs),
                epoch,
                negative_pool: n,
                in_place: true,
            };
            edges.par_chunks_mut(chunk).enumerate().try_for_each(|(c, part)| {
                let mut rng = crate::rng_from(config.seed ^ ((epoch as u64) << 20), c as u64);
                part.iter_mut().try_for_each(|e| step_edge(&cells, &cells, e, &ctx, &mut rng))
            })?;
            if let Some(f) = on_epoch.as_mut() {
                let snapshot: Vec<f64> = (0..atoms.len()).map(|k| cells.get(k)).collect();
                f(epoch, &snapshot);
            }
        }
        for (k, v) in data.iter_mut().enumerate() {
            *v = cells.get(k);
        }
        Ok(())
    }
}
