//! Probability mass functions on the integer lattice.
//!
//! A [`LatticePmf`] stores weights on a contiguous range of integers together
//! with the mass removed by tail truncation (`defect`). Weights are never
//! renormalized after truncation: the defect travels with the law so that
//! downstream tolerances can be audited.

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Real};

/// Largest accepted tail tolerance.
pub const MAX_TAIL_TOL: f64 = 1e-6;

/// Tail mass that truncation is allowed to discard, in `(0, 1e-6]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailTolerance(f64);

impl TailTolerance {
    pub const DEFAULT: TailTolerance = TailTolerance(1e-16);

    pub fn new(tol: f64) -> Result<Self> {
        if tol > 0.0 && tol <= MAX_TAIL_TOL {
            Ok(Self(tol))
        } else {
            Err(Error::ToleranceOutOfRange(tol))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for TailTolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn check_weights<T: Real>(weights: &[T]) -> Result<()> {
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() || *w < T::zero() {
            return Err(Error::InvalidPmf(format!("weight {i} is {w}")));
        }
    }
    Ok(())
}

fn check_mass<T: Real>(mass: T, defect: T) -> Result<()> {
    if !(defect >= T::zero() && defect < T::one()) {
        return Err(Error::InvalidPmf(format!("defect {defect} outside [0, 1)")));
    }
    let total = mass + defect;
    if (total - T::one()).abs() > T::MASS_TOL {
        return Err(Error::InvalidPmf(format!(
            "mass {mass} + defect {defect} deviates from 1 by {:e}",
            (total - T::one()).as_f64()
        )));
    }
    Ok(())
}

/// A pmf on `offset, offset + 1, ..., offset + len - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePmf<T> {
    offset: i64,
    weights: Vec<T>,
    defect: T,
}

impl<T: Real> LatticePmf<T> {
    /// Validates and trims leading/trailing zero weights.
    pub fn new(offset: i64, weights: Vec<T>, defect: T) -> Result<Self> {
        check_weights(&weights)?;
        let (offset, weights) = trim_zeros(offset, weights)?;
        check_mass(compensated_sum(weights.iter().copied()), defect)?;
        Ok(Self { offset, weights, defect })
    }

    /// Builds a pmf from non-negative weights by dividing by their sum.
    pub fn from_unnormalized(offset: i64, weights: Vec<T>) -> Result<Self> {
        check_weights(&weights)?;
        let (offset, mut weights) = trim_zeros(offset, weights)?;
        let total = compensated_sum(weights.iter().copied());
        for w in weights.iter_mut() {
            *w = *w / total;
        }
        Ok(Self { offset, weights, defect: T::zero() })
    }

    /// Builds a pmf from integer counts.
    pub fn from_counts(offset: i64, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidPmf("all counts are zero".into()));
        }
        let total = T::lit(total as f64);
        let weights = counts.iter().map(|&c| T::lit(c as f64) / total).collect();
        Self::from_unnormalized(offset, weights)
    }

    pub fn point_mass(x: i64) -> Self {
        Self { offset: x, weights: vec![T::one()], defect: T::zero() }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn defect(&self) -> T {
        self.defect
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min(&self) -> i64 {
        self.offset
    }

    pub fn max(&self) -> i64 {
        self.offset + self.weights.len() as i64 - 1
    }

    /// Total retained mass, `1 - defect` up to roundoff.
    pub fn mass(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn prob(&self, x: i64) -> T {
        if x < self.min() || x > self.max() {
            T::zero()
        } else {
            self.weights[(x - self.offset) as usize]
        }
    }

    /// `(value, weight)` pairs over the whole contiguous support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + Clone + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.offset + i as i64, w))
    }

    /// Lattice span: gcd of the gaps between support points with positive mass.
    pub fn span(&self) -> i64 {
        let mut prev: Option<i64> = None;
        let mut g = 0i64;
        for (x, w) in self.iter() {
            if w > T::zero() {
                if let Some(p) = prev {
                    g = gcd(g, x - p);
                }
                prev = Some(x);
            }
        }
        g
    }

    /// Total-variation distance, `½ Σ |p(x) − q(x)|`.
    pub fn total_variation(&self, other: &Self) -> T {
        let lo = self.min().min(other.min());
        let hi = self.max().max(other.max());
        let half = T::lit(0.5);
        half * compensated_sum((lo..=hi).map(|x| (self.prob(x) - other.prob(x)).abs()))
    }

    /// Cumulative sums `F(x) = P(X ≤ x)` over the support, compensated.
    pub fn cumulative(&self) -> Vec<T> {
        let mut acc = CompensatedSum::new();
        self.weights
            .iter()
            .map(|&w| {
                acc.add(w);
                acc.value()
            })
            .collect()
    }

    /// Casts to another scalar type. Mass is checked at the looser of the two tolerances.
    pub fn cast<U: Real>(&self) -> Result<LatticePmf<U>> {
        let weights: Vec<U> = self.weights.iter().map(|w| U::lit(w.as_f64())).collect();
        let mass = compensated_sum(weights.iter().map(|w| w.as_f64()));
        let tol = T::MASS_TOL.as_f64().max(U::MASS_TOL.as_f64());
        if (mass + self.defect.as_f64() - 1.0).abs() > tol || weights.iter().any(|w| !(*w >= U::zero())) {
            return Err(Error::InvalidPmf(format!("cast mass {mass} + defect {} is not 1", self.defect)));
        }
        let (offset, weights) = trim_zeros(self.offset, weights)?;
        Ok(LatticePmf { offset, weights, defect: U::lit(self.defect.as_f64()) })
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn trim_zeros<T: Real>(offset: i64, weights: Vec<T>) -> Result<(i64, Vec<T>)> {
    let first = weights.iter().position(|w| *w > T::zero());
    let last = weights.iter().rposition(|w| *w > T::zero());
    match (first, last) {
        (Some(a), Some(b)) => Ok((offset + a as i64, weights[a..=b].to_vec())),
        _ => Err(Error::InvalidPmf("no positive weight".into())),
    }
}

/// Joint pmf of an integer pair `(X, Y)` on a rectangle, stored row-major in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLatticePmf<T> {
    x_offset: i64,
    y_offset: i64,
    nx: usize,
    ny: usize,
    weights: Vec<T>,
    defect: T,
}

impl<T: Real> JointLatticePmf<T> {
    /// `weights[ix * ny + iy]` is `P(X = x_offset + ix, Y = y_offset + iy)`.
    pub fn new(x_offset: i64, y_offset: i64, nx: usize, ny: usize, weights: Vec<T>, defect: T) -> Result<Self> {
        if nx * ny != weights.len() || nx == 0 || ny == 0 {
            return Err(Error::InvalidPmf(format!("{} weights do not fill a {nx}x{ny} grid", weights.len())));
        }
        check_weights(&weights)?;
        check_mass(compensated_sum(weights.iter().copied()), defect)?;
        let raw = Self { x_offset, y_offset, nx, ny, weights, defect };
        Ok(raw.trimmed())
    }

    /// Builds a joint law from `(x, y, weight)` atoms; repeated cells add up.
    pub fn from_atoms(atoms: &[(i64, i64, T)], defect: T) -> Result<Self> {
        let positive = atoms.iter().filter(|a| a.2 > T::zero());
        let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for &(x, y, _) in positive {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            return Err(Error::InvalidPmf("no positive atom".into()));
        }
        let nx = (x1 - x0 + 1) as usize;
        let ny = (y1 - y0 + 1) as usize;
        let mut weights = vec![T::zero(); nx * ny];
        for &(x, y, w) in atoms {
            if w < T::zero() || !w.is_finite() {
                return Err(Error::InvalidPmf(format!("atom ({x}, {y}) has weight {w}")));
            }
            if w > T::zero() {
                let idx = (x - x0) as usize * ny + (y - y0) as usize;
                weights[idx] = weights[idx] + w;
            }
        }
        Self::new(x0, y0, nx, ny, weights, defect)
    }

    /// Law of `(X, f(X))`.
    pub fn deterministic<F: Fn(i64) -> i64>(pmf_x: &LatticePmf<T>, f: F) -> Result<Self> {
        let atoms: Vec<_> = pmf_x.iter().map(|(x, w)| (x, f(x), w)).collect();
        Self::from_atoms(&atoms, pmf_x.defect())
    }

    /// Law of independent `X` and `Y`.
    pub fn independent(pmf_x: &LatticePmf<T>, pmf_y: &LatticePmf<T>) -> Result<Self> {
        let mut weights = Vec::with_capacity(pmf_x.len() * pmf_y.len());
        for &wx in pmf_x.weights() {
            for &wy in pmf_y.weights() {
                weights.push(wx * wy);
            }
        }
        let defect = T::one() - (T::one() - pmf_x.defect()) * (T::one() - pmf_y.defect());
        Self::new(pmf_x.offset(), pmf_y.offset(), pmf_x.len(), pmf_y.len(), weights, defect)
    }

    fn trimmed(self) -> Self {
        let ny = self.ny;
        let row_nonzero = |ix: usize| self.weights[ix * ny..(ix + 1) * ny].iter().any(|w| *w > T::zero());
        let col_nonzero = |iy: usize| (0..self.nx).any(|ix| self.weights[ix * ny + iy] > T::zero());
        let x_lo = (0..self.nx).find(|&i| row_nonzero(i)).unwrap_or(0);
        let x_hi = (0..self.nx).rev().find(|&i| row_nonzero(i)).unwrap_or(0);
        let y_lo = (0..self.ny).find(|&i| col_nonzero(i)).unwrap_or(0);
        let y_hi = (0..self.ny).rev().find(|&i| col_nonzero(i)).unwrap_or(0);
        if x_lo == 0 && y_lo == 0 && x_hi + 1 == self.nx && y_hi + 1 == self.ny {
            return self;
        }
        let nx = x_hi - x_lo + 1;
        let new_ny = y_hi - y_lo + 1;
        let mut weights = Vec::with_capacity(nx * new_ny);
        for ix in x_lo..=x_hi {
            weights.extend_from_slice(&self.weights[ix * ny + y_lo..=ix * ny + y_hi]);
        }
        Self {
            x_offset: self.x_offset + x_lo as i64,
            y_offset: self.y_offset + y_lo as i64,
            nx,
            ny: new_ny,
            weights,
            defect: self.defect,
        }
    }

    pub fn x_offset(&self) -> i64 {
        self.x_offset
    }

    pub fn y_offset(&self) -> i64 {
        self.y_offset
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn defect(&self) -> T {
        self.defect
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn get(&self, x: i64, y: i64) -> T {
        let ix = x - self.x_offset;
        let iy = y - self.y_offset;
        if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
            T::zero()
        } else {
            self.weights[ix as usize * self.ny + iy as usize]
        }
    }

    /// Weights of the row `X = x` over `y_offset..y_offset + ny`.
    pub fn row(&self, x: i64) -> Option<&[T]> {
        let ix = x - self.x_offset;
        if ix < 0 || ix >= self.nx as i64 {
            return None;
        }
        let ix = ix as usize;
        Some(&self.weights[ix * self.ny..(ix + 1) * self.ny])
    }

    /// Positive cells as `(x, y, weight)`, in row-major order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, i64, T)> + Clone + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(move |(i, &w)| (self.x_offset + (i / self.ny) as i64, self.y_offset + (i % self.ny) as i64, w))
    }

    pub fn mass(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn marginal_x(&self) -> LatticePmf<T> {
        let weights = (0..self.nx)
            .map(|ix| compensated_sum(self.weights[ix * self.ny..(ix + 1) * self.ny].iter().copied()))
            .collect();
        LatticePmf::new(self.x_offset, weights, self.defect).expect("marginal of a valid joint law")
    }

    pub fn marginal_y(&self) -> LatticePmf<T> {
        let weights =
            (0..self.ny).map(|iy| compensated_sum((0..self.nx).map(|ix| self.weights[ix * self.ny + iy]))).collect();
        LatticePmf::new(self.y_offset, weights, self.defect).expect("marginal of a valid joint law")
    }
}

/// Mean, standard deviation and third absolute central moment of a law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<T> {
    pub mean: T,
    pub sigma: T,
    pub rho: T,
}

impl<T: Real> Moments<T> {
    /// A single support point: `sigma == 0`, which later violates the variance lower bound.
    pub fn is_degenerate(&self) -> bool {
        self.sigma <= T::zero()
    }
}

/// Moments of `(value, weight)` pairs, normalized by the retained mass.
/// Two passes with compensated accumulation, scanned in iterator order.
fn weighted_moments<T: Real, I>(pairs: I) -> Moments<T>
where
    I: Iterator<Item = (T, T)> + Clone,
{
    let mass = compensated_sum(pairs.clone().map(|(_, w)| w));
    let mean = compensated_sum(pairs.clone().map(|(v, w)| v * w)) / mass;
    let mut var = CompensatedSum::new();
    let mut rho = CompensatedSum::new();
    for (v, w) in pairs {
        let d = v - mean;
        var.add(w * d * d);
        rho.add(w * (d * d * d).abs());
    }
    Moments { mean, sigma: (var.value() / mass).max(T::zero()).sqrt(), rho: rho.value() / mass }
}

/// Exact moments of a lattice law. A point mass yields `sigma == 0`.
pub fn moments<T: Real>(pmf: &LatticePmf<T>) -> Moments<T> {
    weighted_moments(pmf.iter().map(|(x, w)| (T::from_i64_lossy(x), w)))
}

/// Same as [`moments`] with the support scanned from the top down.
pub fn moments_reversed<T: Real>(pmf: &LatticePmf<T>) -> Moments<T> {
    let n = pmf.len();
    weighted_moments((0..n).rev().map(|i| (T::from_i64_lossy(pmf.offset() + i as i64), pmf.weights()[i])))
}

/// Means, scales, third absolute moments and correlation of a joint law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary<T> {
    pub mean_x: T,
    pub mean_y: T,
    pub sigma_x: T,
    pub sigma_y: T,
    pub rho_x: T,
    pub rho_y: T,
    pub cov: T,
    pub r: T,
    /// `sigma_y² (1 − r²)`.
    pub tau_sq: T,
}

/// Moments of both marginals and the correlation. Fails when a marginal is degenerate.
pub fn joint_moments<T: Real>(joint: &JointLatticePmf<T>) -> Result<MomentSummary<T>> {
    let mx = moments(&joint.marginal_x());
    let my = moments(&joint.marginal_y());
    if mx.is_degenerate() {
        return Err(Error::Degenerate("X has a single support point; r is undefined".into()));
    }
    if my.is_degenerate() {
        return Err(Error::Degenerate("Y has a single support point; r is undefined".into()));
    }
    let mass = joint.mass();
    let cov = compensated_sum(
        joint.atoms().map(|(x, y, w)| w * (T::from_i64_lossy(x) - mx.mean) * (T::from_i64_lossy(y) - my.mean)),
    ) / mass;
    let r = (cov / (mx.sigma * my.sigma)).max(-T::one()).min(T::one());
    Ok(MomentSummary {
        mean_x: mx.mean,
        mean_y: my.mean,
        sigma_x: mx.sigma,
        sigma_y: my.sigma,
        rho_x: mx.rho,
        rho_y: my.rho,
        cov,
        r,
        tau_sq: my.sigma * my.sigma * (T::one() - r * r),
    })
}

/// Parameters of `Y′ = Y − E[Y] − slope·(X − E[X])`, the part of `Y` uncorrelated with `X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionParams<T> {
    pub slope: T,
    pub y_center: T,
    pub x_center: T,
    /// Standard deviation of `Y′`.
    pub tau: T,
}

impl<T: Real> ProjectionParams<T> {
    #[inline]
    pub fn apply(&self, x: i64, y: i64) -> T {
        T::from_i64_lossy(y) - self.y_center - self.slope * (T::from_i64_lossy(x) - self.x_center)
    }

    /// Moments of `Y′` under `joint` (mean ≈ 0, sigma = tau).
    pub fn moments(&self, joint: &JointLatticePmf<T>) -> Moments<T> {
        let atoms: Vec<(T, T)> = joint.atoms().map(|(x, y, w)| (self.apply(x, y), w)).collect();
        weighted_moments(atoms.iter().copied())
    }

    /// `Y′` is (numerically) constant, i.e. `Y` is affine in `X`.
    pub fn is_degenerate(&self) -> bool {
        self.tau <= T::lit(1e-9) * (T::one() + self.y_center.abs())
    }
}

/// Projection removing the best affine predictor of `Y` in `X`.
pub fn project_y_prime<T: Real>(joint: &JointLatticePmf<T>) -> Result<ProjectionParams<T>> {
    let mx = moments(&joint.marginal_x());
    if mx.is_degenerate() {
        return Err(Error::Degenerate("X has a single support point; Y′ is undefined".into()));
    }
    let mass = joint.mass();
    let mean_y = compensated_sum(joint.atoms().map(|(_, y, w)| w * T::from_i64_lossy(y))) / mass;
    let cov = compensated_sum(
        joint.atoms().map(|(x, y, w)| w * (T::from_i64_lossy(x) - mx.mean) * (T::from_i64_lossy(y) - mean_y)),
    ) / mass;
    let mut params =
        ProjectionParams { slope: cov / (mx.sigma * mx.sigma), y_center: mean_y, x_center: mx.mean, tau: T::zero() };
    params.tau = params.moments(joint).sigma;
    Ok(params)
}

/// Removes mass from both ends while the total removed stays within `tol`.
/// The next removal is always taken from the lighter end.
pub fn truncate<T: Real>(pmf: &LatticePmf<T>, tol: TailTolerance) -> Result<LatticePmf<T>> {
    let weights: Vec<f64> = pmf.weights().iter().map(|w| w.as_f64()).collect();
    let (offset, kept, removed) = trim_tails(pmf.offset(), &weights, tol.get());
    LatticePmf::new(offset, kept.iter().map(|&w| T::lit(w)).collect(), pmf.defect() + T::lit(removed))
}

fn trim_tails(offset: i64, weights: &[f64], budget: f64) -> (i64, Vec<f64>, f64) {
    let (mut lo, mut hi) = (0usize, weights.len());
    let mut removed = 0.0;
    while hi - lo > 1 {
        let (left, right) = (weights[lo], weights[hi - 1]);
        let take_left = left <= right;
        let w = if take_left { left } else { right };
        if removed + w > budget {
            break;
        }
        removed += w;
        if take_left {
            lo += 1;
        } else {
            hi -= 1;
        }
    }
    (offset + lo as i64, weights[lo..hi].to_vec(), removed)
}

/// Infinite-support families used by the model zoo.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `P(X = k) = e^{−λ} λ^k / k!`, `k ≥ 0`.
    Poisson { lambda: f64 },
    /// `P(X = k) = p (1 − p)^k`, `k ≥ 0`.
    Geometric { p: f64 },
    /// `P(X = l) = e^{−μl} (μl)^{l−1} / l!`, `l ≥ 1`.
    Borel { mu: f64 },
}

const MAX_FAMILY_TERMS: usize = 10_000_000;

impl Family {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Poisson { lambda } => lambda.is_finite() && lambda > 0.0,
            Family::Geometric { p } => p > 0.0 && p < 1.0,
            Family::Borel { mu } => mu > 0.0 && mu < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(format!("{self:?}")))
        }
    }

    fn first(&self) -> i64 {
        match self {
            Family::Borel { .. } => 1,
            _ => 0,
        }
    }

    /// `ln P(X = k)`, evaluated in log space.
    pub fn ln_pmf(&self, k: i64) -> f64 {
        let kf = k as f64;
        match *self {
            Family::Poisson { lambda } => kf * lambda.ln() - lambda - libm::lgamma(kf + 1.0),
            Family::Geometric { p } => p.ln() + kf * (-p).ln_1p(),
            Family::Borel { mu } => -mu * kf + (kf - 1.0) * (mu * kf).ln() - libm::lgamma(kf + 1.0),
        }
    }

    /// Upper bound on `P(X > k)` given `P(X = k + 1)`, valid past the mode.
    fn tail_bound(&self, k: i64, next: f64) -> Option<f64> {
        match *self {
            Family::Poisson { lambda } => {
                let q = lambda / (k as f64 + 2.0);
                (k as f64 > lambda && q < 1.0).then(|| next / (1.0 - q))
            }
            Family::Geometric { p } => Some(next / p),
            Family::Borel { mu } => {
                // successive ratios increase towards μ e^{1−μ} < 1
                let q = mu * (1.0 - mu).exp();
                (k >= 1).then(|| next / (1.0 - q))
            }
        }
    }
}

/// Truncates a parametric family so that the discarded tails total at most `tol`.
pub fn truncate_family<T: Real>(family: Family, tol: TailTolerance) -> Result<LatticePmf<T>> {
    family.validate()?;
    let start = family.first();
    let residual_target = tol.get() * 1e-7;
    let mut terms = Vec::new();
    let mut k = start;
    let residual = loop {
        let w = family.ln_pmf(k).exp();
        terms.push(w);
        let next = family.ln_pmf(k + 1).exp();
        if let Some(bound) = family.tail_bound(k, next) {
            if bound <= residual_target {
                break bound;
            }
        }
        if terms.len() > MAX_FAMILY_TERMS {
            return Err(Error::ParameterOutOfRange(format!("{family:?} needs more than {MAX_FAMILY_TERMS} terms")));
        }
        k += 1;
    };
    let (offset, kept, removed) = trim_tails(start, &terms, tol.get() - residual);
    LatticePmf::new(offset, kept.iter().map(|&w| T::lit(w)).collect(), T::lit(removed + residual))
}
