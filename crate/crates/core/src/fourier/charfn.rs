//! Characteristic functions of a joint lattice law and their `t`-derivatives.

use num_complex::Complex;
use rayon::prelude::*;

use crate::lattice::{moments, JointLatticePmf, ProjectionParams};
use crate::scalar::Real;

/// `φ(s, t) = E[exp{i s (X − E[X]) + i t V}]` where `V` is either `Y` or the projection `Y′`.
///
/// Atoms are kept in the joint's row-major order so every evaluation sums in the same order.
#[derive(Clone, Debug)]
pub struct CharFn<T> {
    atoms: Vec<(T, T, T)>,
}

impl<T: Real> CharFn<T> {
    /// Centered `X` paired with the raw `Y`.
    pub fn new(joint: &JointLatticePmf<T>) -> Self {
        let mean_x = moments(&joint.marginal_x()).mean;
        let atoms = joint.atoms().map(|(x, y, w)| (T::from_i64_lossy(x) - mean_x, T::from_i64_lossy(y), w)).collect();
        Self { atoms }
    }

    /// Centered `X` paired with `Y′`.
    pub fn projected(joint: &JointLatticePmf<T>, proj: &ProjectionParams<T>) -> Self {
        let atoms =
            joint.atoms().map(|(x, y, w)| (T::from_i64_lossy(x) - proj.x_center, proj.apply(x, y), w)).collect();
        Self { atoms }
    }

    pub fn eval(&self, s: T, t: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(x, y, w) in &self.atoms {
            let (sin, cos) = (s * x + t * y).sin_cos();
            acc.re = acc.re + w * cos;
            acc.im = acc.im + w * sin;
        }
        acc
    }

    /// `∂^order φ / ∂t^order`, i.e. `E[(iV)^order e^{...}]`.
    pub fn dt(&self, s: T, t: T, order: u32) -> Complex<T> {
        let i_pow = Complex::new(T::zero(), T::one()).powu(order);
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(x, y, w) in &self.atoms {
            let (sin, cos) = (s * x + t * y).sin_cos();
            let scale = w * y.powi(order as i32);
            acc.re = acc.re + scale * cos;
            acc.im = acc.im + scale * sin;
        }
        acc * i_pow
    }

    /// `(φ, ∂φ/∂t)` in one pass.
    pub fn eval_with_dt(&self, s: T, t: T) -> (Complex<T>, Complex<T>) {
        let mut phi = Complex::new(T::zero(), T::zero());
        let mut d = Complex::new(T::zero(), T::zero());
        for &(x, y, w) in &self.atoms {
            let (sin, cos) = (s * x + t * y).sin_cos();
            phi.re = phi.re + w * cos;
            phi.im = phi.im + w * sin;
            // i y e^{iθ} = y (−sin θ + i cos θ)
            d.re = d.re - w * y * sin;
            d.im = d.im + w * y * cos;
        }
        (phi, d)
    }
}

/// `φ(s, t)` of `(X − E[X], Y)`.
pub fn phi<T: Real>(joint: &JointLatticePmf<T>, s: T, t: T) -> Complex<T> {
    CharFn::new(joint).eval(s, t)
}

/// `∂^order φ/∂t^order` of `(X − E[X], Y)`.
pub fn phi_dt<T: Real>(joint: &JointLatticePmf<T>, s: T, t: T, order: u32) -> Complex<T> {
    CharFn::new(joint).dt(s, t, order)
}

/// Values of a characteristic function on a rectangular grid.
#[derive(Clone, Debug)]
pub struct CharFnGrid<T> {
    pub s_points: Vec<T>,
    pub t_points: Vec<T>,
    /// `values[i][j] = φ(s_points[i], t_points[j])`.
    pub values: Vec<Vec<Complex<T>>>,
}

impl<T: Real> CharFnGrid<T> {
    pub fn evaluate(cf: &CharFn<T>, s_points: Vec<T>, t_points: Vec<T>) -> Self {
        let values = s_points.par_iter().map(|&s| t_points.iter().map(|&t| cf.eval(s, t)).collect()).collect();
        Self { s_points, t_points, values }
    }

    pub fn max_modulus(&self) -> T {
        self.values.iter().flat_map(|row| row.iter().map(|z| z.norm())).fold(T::zero(), T::max)
    }
}

/// `n` equally spaced points covering `[lo, hi]`, endpoints included.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![(lo + hi) * T::lit(0.5)],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n).map(|i| if i + 1 == n { hi } else { lo + step * T::from_usize_lossy(i) }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{project_y_prime, truncate_family, Family, LatticePmf, TailTolerance};
    use approx::assert_abs_diff_eq;

    fn occupancy() -> JointLatticePmf<f64> {
        let px = truncate_family(Family::Poisson { lambda: 1.0 }, TailTolerance::DEFAULT).unwrap();
        JointLatticePmf::deterministic(&px, |x| (x == 0) as i64).unwrap()
    }

    #[test]
    fn phi_at_origin_is_mass() {
        let j = occupancy();
        let v = phi(&j, 0.0, 0.0);
        assert_abs_diff_eq!(v.re, 1.0 - j.defect(), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn centered_coin_is_cosine() {
        let coin = LatticePmf::new(0, vec![0.5, 0.5], 0.0).unwrap();
        let j = JointLatticePmf::independent(&coin, &LatticePmf::point_mass(0)).unwrap();
        for s in [0.1f64, 0.7, 2.0, 3.0] {
            let v = phi(&j, s, 0.0);
            assert_abs_diff_eq!(v.re, (s / 2.0).cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn matches_double_loop_oracle() {
        let j = occupancy();
        let (s, t) = (0.3, 0.2);
        let mean_x: f64 = (0..j.nx() as i64).map(|x| x as f64 * j.marginal_x().prob(x)).sum::<f64>() / j.mass();
        let mut re = 0.0;
        let mut im = 0.0;
        for x in j.x_offset()..j.x_offset() + j.nx() as i64 {
            for y in j.y_offset()..j.y_offset() + j.ny() as i64 {
                let w = j.get(x, y);
                let a = s * (x as f64 - mean_x) + t * y as f64;
                re += w * a.cos();
                im += w * a.sin();
            }
        }
        let v = phi(&j, s, t);
        assert_abs_diff_eq!(v.re, re, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, im, epsilon = 1e-14);
    }

    #[test]
    fn derivatives_at_origin() {
        let j = occupancy();
        let ey = (-1.0f64).exp();
        let d1 = phi_dt(&j, 0.0, 0.0, 1);
        assert_abs_diff_eq!(d1.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d1.im, ey, epsilon = 1e-14);
        let d2 = phi_dt(&j, 0.0, 0.0, 2);
        assert_abs_diff_eq!(d2.re, -ey, epsilon = 1e-14);
        let cf = CharFn::new(&j);
        let (p, d) = cf.eval_with_dt(0.4, -0.3);
        assert_abs_diff_eq!((p - cf.eval(0.4, -0.3)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((d - cf.dt(0.4, -0.3, 1)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn projected_derivative_vanishes_at_origin() {
        let j = occupancy();
        let proj = project_y_prime(&j).unwrap();
        let cf = CharFn::projected(&j, &proj);
        assert!(cf.dt(0.0, 0.0, 1).norm() < 1e-15);
    }

    #[test]
    fn grid_modulus_bounded() {
        let cf = CharFn::new(&occupancy());
        let g = CharFnGrid::evaluate(&cf, linspace(-3.2, 3.2, 41), linspace(-2.0, 2.0, 21));
        assert!(g.max_modulus() <= 1.0 + 1e-12);
        assert_eq!(g.values.len(), 41);
    }
}
