//! Starting layouts for the optimizer.
//!
//! Spectral initialization uses, per connected component, the eigenvectors
//! of the symmetric normalized Laplacian `I - D^-1/2 W D^-1/2` belonging to
//! the 2nd through `(d+1)`-th smallest eigenvalues. They are found by
//! subspace iteration on `(I + D^-1/2 W D^-1/2) / 2`, whose spectrum lies in
//! `[0, 1]` with the Laplacian's smallest eigenvalues on top, deflating the
//! known leading vector `D^1/2 1`. Components are laid out on a grid.

use alloc::{vec, vec::Vec};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{math, DenseMatrix, Error, FuzzyGraph, Result};

/// Coordinates are scaled into `[-BOX, BOX]` on every axis.
pub const BOX: f64 = 10.0;
const COMPONENT_SPACING: f64 = 2.5 * BOX;
const MAX_SWEEPS: usize = 400;
const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    #[default]
    Spectral,
    RandomUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub coords: DenseMatrix,
    /// The eigensolver broke down and the layout is random uniform instead.
    pub fell_back: bool,
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components(graph: &FuzzyGraph) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..graph.n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in graph.edges() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
    }
    let mut slot = vec![usize::MAX; graph.n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..graph.n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(i);
    }
    comps
}

pub fn random_uniform(n: usize, dims: usize, seed: u64) -> DenseMatrix {
    let mut rng = crate::rng_from(seed, 0x696e_6974);
    let mut m = DenseMatrix::zeros(n, dims);
    for v in m.as_mut_slice() {
        *v = rng.random_range(-BOX..BOX);
    }
    m
}

/// Builds the starting layout for `graph` in `dims` dimensions.
pub fn initialize(graph: &FuzzyGraph, dims: usize, method: InitMethod, seed: u64) -> Result<Initialization> {
    if dims == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    match method {
        InitMethod::RandomUniform => Ok(Initialization {
            coords: random_uniform(graph.n, dims, seed),
            fell_back: false,
        }),
        InitMethod::Spectral => match spectral_layout(graph, dims, seed) {
            Some(coords) => Ok(Initialization { coords, fell_back: false }),
            None => Ok(Initialization {
                coords: random_uniform(graph.n, dims, seed),
                fell_back: true,
            }),
        },
    }
}

fn spectral_layout(graph: &FuzzyGraph, dims: usize, seed: u64) -> Option<DenseMatrix> {
    let n = graph.n;
    let comps = connected_components(graph);
    let adj = graph.adjacency();
    let mut local = vec![usize::MAX; n];
    let mut coords = DenseMatrix::zeros(n, dims);
    let grid = {
        let c = comps.len() as f64;
        let mut side = math::sqrt(c) as usize;
        while side * side < comps.len() {
            side += 1;
        }
        side.max(1)
    };

    for (ci, comp) in comps.iter().enumerate() {
        for (li, &g) in comp.iter().enumerate() {
            local[g] = li;
        }
        let block = if comp.len() > dims + 1 {
            let (_, vecs) = component_eigenvectors(comp, &local, &adj, dims, seed ^ ci as u64)?;
            vecs
        } else {
            random_uniform(comp.len(), dims, seed ^ (ci as u64).wrapping_mul(0x9e37_79b9))
        };
        let scale = max_abs(block.as_slice());
        let scale = if scale > 0.0 { BOX / scale } else { 1.0 };
        let (gx, gy) = ((ci % grid) as f64, (ci / grid) as f64);
        for (li, &g) in comp.iter().enumerate() {
            let row = coords.row_mut(g);
            for (d, v) in row.iter_mut().enumerate() {
                *v = block.get(li, d) * scale;
            }
            if comps.len() > 1 {
                row[0] += gx * COMPONENT_SPACING;
                if dims > 1 {
                    row[1] += gy * COMPONENT_SPACING;
                } else {
                    row[0] += gy * COMPONENT_SPACING * grid as f64;
                }
            }
        }
    }

    if comps.len() > 1 {
        for d in 0..dims {
            let mean = (0..n).map(|i| coords.get(i, d)).sum::<f64>() / n as f64;
            for i in 0..n {
                coords.set(i, d, coords.get(i, d) - mean);
            }
        }
        let s = max_abs(coords.as_slice());
        if s > 0.0 {
            coords.as_mut_slice().iter_mut().for_each(|v| *v *= BOX / s);
        }
    }
    if coords.as_slice().iter().all(|v| v.is_finite()) {
        Some(coords)
    } else {
        None
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Eigenpairs of the normalized Laplacian restricted to one connected
/// component: eigenvalues 2..=dims+1 (ascending) and their eigenvectors as
/// columns of an `m x dims` matrix. `None` if the iteration breaks down.
pub fn component_eigenvectors(
    comp: &[usize],
    local: &[usize],
    adj: &crate::fuzzy_graph::Adjacency,
    dims: usize,
    seed: u64,
) -> Option<(Vec<f64>, DenseMatrix)> {
    let m = comp.len();
    if m <= dims + 1 {
        return None;
    }
    let inv_sqrt_deg: Vec<f64> = comp
        .iter()
        .map(|&g| {
            let (_, w) = adj.row(g);
            1.0 / math::sqrt(w.iter().sum::<f64>())
        })
        .collect();
    let mut lead: Vec<f64> = inv_sqrt_deg.iter().map(|v| 1.0 / v).collect();
    normalize(&mut lead)?;

    // y = (x + D^-1/2 W D^-1/2 x) / 2
    let apply = |x: &[f64], y: &mut [f64]| {
        for (li, &g) in comp.iter().enumerate() {
            let (targets, weights) = adj.row(g);
            let mut acc = 0.0;
            for (&t, &w) in targets.iter().zip(weights) {
                let lt = local[t];
                acc += w * inv_sqrt_deg[lt] * x[lt];
            }
            y[li] = 0.5 * (x[li] + inv_sqrt_deg[li] * acc);
        }
    };

    let block = (dims + 2).min(m - 1);
    let mut rng = crate::rng_from(seed, 0x7370_6563);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis, &lead)?;

    let mut image = vec![vec![0.0; m]; block];
    let mut ritz = vec![0.0; block];
    for sweep in 0..MAX_SWEEPS {
        for (q, y) in basis.iter().zip(image.iter_mut()) {
            apply(q, y);
        }
        // Rayleigh-Ritz every few sweeps to rotate toward eigenvectors.
        if sweep % 10 == 9 || sweep == MAX_SWEEPS - 1 {
            let mut h = vec![0.0; block * block];
            for a in 0..block {
                for b in a..block {
                    let v = dot(&basis[a], &image[b]);
                    h[a * block + b] = v;
                    h[b * block + a] = v;
                }
            }
            let (vals, vecs) = jacobi_eigen(&mut h, block);
            let mut order: Vec<usize> = (0..block).collect();
            order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
            let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
                order
                    .iter()
                    .map(|&c| {
                        let mut out = vec![0.0; m];
                        for (r, s) in src.iter().enumerate() {
                            let f = vecs[r * block + c];
                            out.iter_mut().zip(s).for_each(|(o, v)| *o += f * v);
                        }
                        out
                    })
                    .collect()
            };
            basis = rotate(&basis);
            image = rotate(&image);
            for (slot, &c) in ritz.iter_mut().zip(&order) {
                *slot = vals[c];
            }
            let worst = (0..dims)
                .map(|c| {
                    let r: f64 = basis[c]
                        .iter()
                        .zip(&image[c])
                        .map(|(q, y)| (y - ritz[c] * q) * (y - ritz[c] * q))
                        .sum();
                    math::sqrt(r)
                })
                .fold(0.0f64, f64::max);
            if worst < RESIDUAL_TOL || sweep == MAX_SWEEPS - 1 {
                break;
            }
        }
        core::mem::swap(&mut basis, &mut image);
        orthonormalize(&mut basis, &lead)?;
    }

    let mut out = DenseMatrix::zeros(m, dims);
    for c in 0..dims {
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = basis[c]
            .iter()
            .copied()
            .fold(0.0f64, |p, v| if v.abs() > p.abs() { v } else { p });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for li in 0..m {
            out.set(li, c, sign * basis[c][li]);
        }
    }
    // Laplacian eigenvalue = 1 - (2 * mu - 1) = 2 - 2 * mu
    let eigenvalues = ritz[..dims].iter().map(|mu| 2.0 - 2.0 * mu).collect();
    Some((eigenvalues, out))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Option<()> {
    let norm = math::sqrt(dot(v, v));
    if !(norm > 1e-12) || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}

/// Modified Gram-Schmidt against `lead` and then among themselves.
fn orthonormalize(basis: &mut [Vec<f64>], lead: &[f64]) -> Option<()> {
    for c in 0..basis.len() {
        let (done, rest) = basis.split_at_mut(c);
        let v = &mut rest[0];
        for _ in 0..2 {
            let p = dot(v, lead);
            v.iter_mut().zip(lead).for_each(|(x, l)| *x -= p * l);
            for q in done.iter() {
                let p = dot(v, q);
                v.iter_mut().zip(q).for_each(|(x, l)| *x -= p * l);
            }
        }
        normalize(v)?;
    }
    Some(())
}

/// Cyclic Jacobi for a small symmetric matrix (row-major, overwritten).
/// Returns eigenvalues and the eigenvector matrix (columns).
fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy_graph::Edge;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> FuzzyGraph {
        let edges = edges.iter().map(|&(i, j, weight)| Edge { i, j, weight }).collect();
        FuzzyGraph::from_edges(n, edges, vec![0.0; n], vec![1.0; n], vec![false; n], 1.0).unwrap()
    }

    #[test]
    fn components_found() {
        let g = graph(6, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]);
        assert_eq!(connected_components(&g), vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
    }

    #[test]
    fn random_uniform_is_seeded() {
        let g = graph(5, &[(0, 1, 1.0)]);
        let a = initialize(&g, 2, InitMethod::RandomUniform, 3).unwrap();
        let b = initialize(&g, 2, InitMethod::RandomUniform, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.coords.rows(), a.coords.cols()), (5, 2));
        assert!(a.coords.as_slice().iter().all(|v| v.abs() <= BOX));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let mut a = vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (mut vals, _) = jacobi_eigen(&mut a, 3);
        vals.sort_by(f64::total_cmp);
        for (v, e) in vals.iter().zip([1.0, 3.0, 5.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_dims_rejected() {
        let g = graph(3, &[(0, 1, 1.0)]);
        assert!(initialize(&g, 0, InitMethod::Spectral, 0).is_err());
    }
}
