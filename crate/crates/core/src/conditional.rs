//! Standardizations of `U_N`, Kolmogorov distance to `Φ`, and moment deviations.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::ExperimentSpec;
use crate::lattice::{joint_moments, LatticePmf, MomentSummary};
use crate::scalar::{compensated_sum, Real};

/// Standard normal cdf via `erfc`, accurate to a few ulps in both tails.
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::lit(0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StandardizationKind {
    /// Centered at `N·E[Y] + r σ_Y/σ_X (m − N·E[X])`, scaled by `√N·τ`.
    Affine,
    /// Centered and scaled by the exact mean and standard deviation of `U`.
    Natural,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardization<T> {
    pub center: T,
    pub scale: T,
    pub kind: StandardizationKind,
}

impl<T: Real> Standardization<T> {
    /// Refuses `τ = 0`: then `Y` is affine in `X` and the limit is degenerate.
    pub fn affine(summary: &MomentSummary<T>, n: usize, m: i64) -> Result<Self> {
        let nn = T::from_usize_lossy(n);
        let tau = summary.tau_sq.max(T::zero()).sqrt();
        if !(tau > T::lit(1e-9) * summary.sigma_y) {
            return Err(Error::Degenerate("tau = 0: Y is affine in X".into()));
        }
        let center = nn * summary.mean_y
            + summary.r * summary.sigma_y / summary.sigma_x * (T::from_i64_lossy(m) - nn * summary.mean_x);
        Ok(Self { center, scale: nn.sqrt() * tau, kind: StandardizationKind::Affine })
    }

    pub fn natural(law: &LatticePmf<T>) -> Result<Self> {
        let (mean, var) = conditional_mean_var(law);
        if !(var > T::zero()) {
            return Err(Error::Degenerate("conditional law is a point mass".into()));
        }
        Ok(Self { center: mean, scale: var.sqrt(), kind: StandardizationKind::Natural })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceReport<T> {
    pub distance: T,
    /// Standardized point where the sup is attained (smallest on ties).
    pub argmax_point: T,
    pub n: usize,
    /// `distance·√N`.
    pub scaled: T,
}

const SCAN_CHUNK: usize = 4096;

/// `sup_x |P((U − center)/scale ≤ x) − Φ(x)|`, exact over the lattice.
///
/// `F` is a step function, so the sup is attained at a jump, either at the point or as
/// its left limit. Both are checked at every support point.
pub fn kolmogorov_distance<T: Real>(
    law: &LatticePmf<T>,
    std: &Standardization<T>,
    n: usize,
) -> Result<DistanceReport<T>> {
    if !(std.scale > T::zero()) {
        return Err(Error::ParameterOutOfRange(format!("scale must be positive, got {}", std.scale)));
    }
    let cdf = law.cumulative();
    let offset = law.offset();
    let best = cdf
        .par_chunks(SCAN_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut best = (T::zero(), T::infinity());
            for (j, &f) in chunk.iter().enumerate() {
                let i = c * SCAN_CHUNK + j;
                let below = if i == 0 { T::zero() } else { cdf[i - 1] };
                let x = (T::from_i64_lossy(offset + i as i64) - std.center) / std.scale;
                let phi = normal_cdf(x);
                let d = (f - phi).abs().max((below - phi).abs());
                if d > best.0 {
                    best = (d, x);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((T::zero(), T::infinity()), |acc, b| if b.0 > acc.0 { b } else { acc });
    let distance = best.0.min(T::one());
    Ok(DistanceReport { distance, argmax_point: best.1, n, scaled: distance * T::from_usize_lossy(n).sqrt() })
}

/// Exact mean and variance, the latter around the computed mean.
pub fn conditional_mean_var<T: Real>(law: &LatticePmf<T>) -> (T, T) {
    let mass = compensated_sum(law.weights().iter().copied());
    let mean = compensated_sum(law.iter().map(|(u, w)| w * T::from_i64_lossy(u))) / mass;
    let var = compensated_sum(law.iter().map(|(u, w)| {
        let d = T::from_i64_lossy(u) - mean;
        w * d * d
    })) / mass;
    (mean, var.max(T::zero()))
}

/// `E[e^{itU}]` of a lattice law.
pub fn law_charfn<T: Real>(law: &LatticePmf<T>, t: T) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for (u, w) in law.iter() {
        let (s, c) = (t * T::from_i64_lossy(u)).sin_cos();
        acc.re = acc.re + w * c;
        acc.im = acc.im + w * s;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentDeviation<T> {
    /// `|E[U] − N E[Y] − r σ_Y/σ_X (m − N E[X])|`.
    pub dev1: T,
    /// `|Var(U) − N τ²| / √N`.
    pub dev2: T,
    pub mean: T,
    pub variance: T,
}

pub fn moment_deviation<T: Real>(spec: &ExperimentSpec<T>) -> Result<MomentDeviation<T>> {
    if spec.n() < 3 {
        return Err(Error::Precondition(format!("moment bounds need N >= 3, got {}", spec.n())));
    }
    let summary = joint_moments(spec.joint())?;
    let law = spec.conditional()?.law;
    Ok(deviation_from_law(&law, &summary, spec.n(), spec.m()))
}

/// Moment deviations of an already computed conditional law.
pub fn deviation_from_law<T: Real>(law: &LatticePmf<T>, s: &MomentSummary<T>, n: usize, m: i64) -> MomentDeviation<T> {
    let nn = T::from_usize_lossy(n);
    let (mean, variance) = conditional_mean_var(law);
    let affine = nn * s.mean_y + s.r * s.sigma_y / s.sigma_x * (T::from_i64_lossy(m) - nn * s.mean_x);
    MomentDeviation { dev1: (mean - affine).abs(), dev2: (variance - nn * s.tau_sq).abs() / nn.sqrt(), mean, variance }
}
