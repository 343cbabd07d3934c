//! Composite Gauss–Legendre quadrature with panel refinement.

use std::ops::{Add, Mul};

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        for i in 0..n.div_ceil(2) {
            // Newton on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]` with a single panel.
    pub fn panel<V, F>(&self, a: T, b: T, f: &F) -> V
    where
        V: Copy + Zero + Add<Output = V> + Mul<T, Output = V>,
        F: Fn(T) -> V,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = V::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * *x) * (*w * half);
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule with `panels` equal panels; panel sums are reduced in index order.
pub fn composite<T, V, F>(rule: &GaussLegendre<T>, a: T, b: T, panels: usize, f: &F) -> V
where
    T: Real,
    V: Copy + Zero + Add<Output = V> + Mul<T, Output = V> + Send,
    F: Fn(T) -> V + Sync,
{
    let width = (b - a) / T::from_usize_lossy(panels);
    let sums: Vec<V> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let lo = a + width * T::from_usize_lossy(i);
            let hi = if i + 1 == panels { b } else { lo + width };
            rule.panel(lo, hi, f)
        })
        .collect();
    sums.into_iter().fold(V::zero(), |acc, v| acc + v)
}

/// Result of a refined integration.
#[derive(Clone, Copy, Debug)]
pub struct Refined<V, T> {
    pub value: V,
    /// Change between the last two refinement levels.
    pub estimate: T,
    pub panels: usize,
}

/// Doubles the panel count from `min_panels` until two successive levels agree to `tol`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_refined<T, V, F, N>(
    rule: &GaussLegendre<T>,
    a: T,
    b: T,
    min_panels: usize,
    tol: T,
    max_levels: usize,
    norm: N,
    f: &F,
) -> Result<Refined<V, T>>
where
    T: Real,
    V: Copy + Zero + Add<Output = V> + Mul<T, Output = V> + std::ops::Sub<Output = V> + Send,
    F: Fn(T) -> V + Sync,
    N: Fn(V) -> T,
{
    let mut panels = min_panels.max(1);
    let mut prev = composite(rule, a, b, panels, f);
    let mut estimate = T::infinity();
    for _ in 0..max_levels {
        panels *= 2;
        let next = composite(rule, a, b, panels, f);
        estimate = norm(next - prev);
        prev = next;
        if estimate <= tol {
            return Ok(Refined { value: prev, estimate, panels });
        }
    }
    Err(Error::QuadratureFailure { estimate: estimate.as_f64() })
}

/// Tensor-product composite rule on `[a, b]²`.
pub fn composite_2d<T, F>(rule: &GaussLegendre<T>, a: T, b: T, panels: usize, f: &F) -> T
where
    T: Real,
    F: Fn(T, T) -> T + Sync,
{
    let inner = |s: T| composite_serial(rule, a, b, panels, &|u: T| f(s, u));
    composite(rule, a, b, panels, &inner)
}

fn composite_serial<T: Real, F: Fn(T) -> T>(rule: &GaussLegendre<T>, a: T, b: T, panels: usize, f: &F) -> T {
    let width = (b - a) / T::from_usize_lossy(panels);
    (0..panels).fold(T::zero(), |acc, i| {
        let lo = a + width * T::from_usize_lossy(i);
        let hi = if i + 1 == panels { b } else { lo + width };
        acc + rule.panel(lo, hi, f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::<f64>::new(8);
        let total: f64 = rule.weights().iter().sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-14);
        // degree 15 is exact for 8 nodes
        let v: f64 = rule.panel(0.0, 1.0, &|x: f64| x.powi(15));
        assert_abs_diff_eq!(v, 1.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn refinement_converges_on_gaussian() {
        let rule = GaussLegendre::<f64>::new(10);
        let r = integrate_refined(&rule, -12.0, 12.0, 8, 1e-13, 8, |d: f64| d.abs(), &|x: f64| (-x * x).exp()).unwrap();
        assert_abs_diff_eq!(r.value, std::f64::consts::PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn refinement_reports_failure() {
        let rule = GaussLegendre::<f64>::new(2);
        let r = integrate_refined(&rule, 0.0, 1.0, 1, 0.0, 2, |d: f64| d.abs(), &|x: f64| x.sqrt());
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn tensor_rule() {
        let rule = GaussLegendre::<f64>::new(6);
        let v = composite_2d(&rule, 0.0, 1.0, 2, &|x: f64, y: f64| x * y * y);
        assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-15);
    }
}
