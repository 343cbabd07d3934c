//! Marginal laws and `(X, f(X))` joints of the classical models.

use crate::error::Result;
use crate::lattice::{truncate_family, Family, JointLatticePmf, LatticePmf, TailTolerance};
use crate::scalar::Real;

pub fn poisson_pmf<T: Real>(lambda: f64, tol: TailTolerance) -> Result<LatticePmf<T>> {
    truncate_family(Family::Poisson { lambda }, tol)
}

/// Support `{0, 1, ...}` with `P(X = k) = p (1 − p)^k`.
pub fn geometric_pmf<T: Real>(p: f64, tol: TailTolerance) -> Result<LatticePmf<T>> {
    truncate_family(Family::Geometric { p }, tol)
}

/// Support `{1, 2, ...}` with `P(X = l) = e^{−μl} (μl)^{l−1} / l!`.
pub fn borel_pmf<T: Real>(mu: f64, tol: TailTolerance) -> Result<LatticePmf<T>> {
    truncate_family(Family::Borel { mu }, tol)
}

/// `(X, 1{X = level})`.
pub fn indicator_joint<T: Real>(pmf_x: &LatticePmf<T>, level: i64) -> Result<JointLatticePmf<T>> {
    JointLatticePmf::deterministic(pmf_x, |x| (x == level) as i64)
}

/// `X ~ Poisson(λ)` paired with the empty-urn indicator `1{X = 0}`.
pub fn occupancy_joint<T: Real>(lambda: f64, tol: TailTolerance) -> Result<JointLatticePmf<T>> {
    indicator_joint(&poisson_pmf(lambda, tol)?, 0)
}
