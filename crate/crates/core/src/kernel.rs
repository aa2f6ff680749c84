//! Low-dimensional membership kernel `w(x) = 1 / (1 + a x^(2b))`.

use alloc::{format, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowDimKernel {
    pub a: f64,
    pub b: f64,
}

impl LowDimKernel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid(format!("kernel needs a, b > 0 (a = {a}, b = {b})")));
        }
        Ok(Self { a, b })
    }

    /// Membership at embedding distance `x`.
    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        1.0 / (1.0 + self.a * math::pow(x, 2.0 * self.b))
    }

    /// Membership at squared distance `s`.
    #[inline]
    pub fn weight_sq(&self, s: f64) -> f64 {
        1.0 / (1.0 + self.a * math::pow(s, self.b))
    }

    /// Gradient factor of `-ln w` with respect to `y_i`: the gradient is
    /// `attraction(s) * (y_i - y_j)` where `s = |y_i - y_j|^2`.
    #[inline]
    pub fn attraction(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let sb = math::pow(s, self.b);
        2.0 * self.a * self.b * sb / s / (1.0 + self.a * sb)
    }

    /// Gradient factor of `-ln(1 - w)` with respect to `y_i`, negated: the
    /// gradient is `-repulsion(s) * (y_i - y_j)`. Infinite at `s = 0`.
    #[inline]
    pub fn repulsion(&self, s: f64) -> f64 {
        2.0 * self.b / (s * (1.0 + self.a * math::pow(s, self.b)))
    }
}

const GRID_POINTS: usize = 300;

fn target_curve(min_dist: f64, spread: f64) -> (Vec<f64>, Vec<f64>) {
    let top = 3.0 * spread;
    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| top * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let ys = xs
        .iter()
        .map(|&x| {
            if x <= min_dist {
                1.0
            } else {
                math::exp(-(x - min_dist) / spread)
            }
        })
        .collect();
    (xs, ys)
}

fn sum_sq(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = 1.0 / (1.0 + a * math::pow(x, 2.0 * b)) - y;
            r * r
        })
        .sum()
}

/// Least-squares fit of `(a, b)` to the curve that is flat at 1 up to
/// `min_dist` and decays as `exp(-(x - min_dist) / spread)` after it,
/// sampled on 300 points over `[0, 3 * spread]`. Levenberg-Marquardt from
/// `(1, 1)`.
pub fn fit_kernel(min_dist: f64, spread: f64) -> Result<LowDimKernel> {
    if !(min_dist > 0.0 && min_dist <= spread && spread.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel fit needs 0 < min_dist <= spread (min_dist = {min_dist}, spread = {spread})"
        )));
    }
    let (xs, ys) = target_curve(min_dist, spread);
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut cost = sum_sq(&xs, &ys, a, b);
    let mut lambda = 1e-3;
    let mut converged = false;

    for _ in 0..1000 {
        // Normal equations J^T J and J^T r.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let p = if x > 0.0 { math::pow(x, 2.0 * b) } else { 0.0 };
            let denom = 1.0 + a * p;
            let r = 1.0 / denom - y;
            let da = -p / (denom * denom);
            let db = if x > 0.0 { -2.0 * a * p * math::ln(x) / (denom * denom) } else { 0.0 };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        if ga.abs().max(gb.abs()) < 1e-14 {
            converged = true;
            break;
        }

        let mut improved = false;
        while lambda < 1e16 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 && det.is_finite() && det != 0.0 {
                let new_cost = sum_sq(&xs, &ys, na, nb);
                if new_cost <= cost {
                    let small = (step_a.abs() <= 1e-13 * a.abs()) && (step_b.abs() <= 1e-13 * b.abs());
                    a = na;
                    b = nb;
                    let drop = cost - new_cost;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if small || drop <= 1e-16 * cost {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left at any damping: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }

    if !converged || !cost.is_finite() {
        return Err(Error::KernelFit { residual: cost });
    }
    LowDimKernel::new(a, b).map_err(|_| Error::KernelFit { residual: cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_at_zero_is_one() {
        for (a, b) in [(1.577, 0.895), (0.1, 1.9), (10.0, 0.3)] {
            let k = LowDimKernel::new(a, b).unwrap();
            assert_eq!(k.weight(0.0), 1.0);
            assert!(k.weight(0.5) > k.weight(0.6));
        }
    }

    #[test]
    fn default_min_dist_fit() {
        let k = fit_kernel(0.1, 1.0).unwrap();
        assert!((k.a - 1.577).abs() < 1e-3, "a = {}", k.a);
        assert!((k.b - 0.895).abs() < 1e-3, "b = {}", k.b);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fit_kernel(0.0, 1.0).is_err());
        assert!(fit_kernel(2.0, 1.0).is_err());
        assert!(LowDimKernel::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn gradient_factors_match_derivatives() {
        let k = LowDimKernel::new(1.3, 0.8).unwrap();
        let s = 0.7;
        let h = 1e-6;
        // d(-ln w)/ds * 2 and d(-ln(1 - w))/ds * 2
        let f = |s: f64| -k.weight_sq(s).ln();
        let g = |s: f64| -(1.0 - k.weight_sq(s)).ln();
        let fd_f = (f(s + h) - f(s - h)) / (2.0 * h) * 2.0;
        let fd_g = (g(s + h) - g(s - h)) / (2.0 * h) * 2.0;
        assert!((k.attraction(s) - fd_f).abs() < 1e-6);
        assert!((-k.repulsion(s) - fd_g).abs() < 1e-6);
    }
}
