//! Characteristic functions, exact lattice convolution, and the Bartlett inversion.

mod bartlett;
mod charfn;
mod convolution;

pub use bartlett::{psi_bartlett, BartlettValue, PSI_TOL};
pub use charfn::{linspace, phi, phi_dt, CharFn, CharFnGrid};
pub use convolution::{
    conditional_slice, error_budget, joint_law_sn_tn, prob_s_eq_m, sum_law, ConditionalSlice, EngineConfig,
};

use crate::error::{Error, Result};
use crate::lattice::{moments, JointLatticePmf};
use crate::scalar::Real;

/// One `(joint law, N, m, η₀)` configuration.
#[derive(Clone, Debug)]
pub struct ExperimentSpec<T> {
    joint: JointLatticePmf<T>,
    n: usize,
    m: i64,
    eta0: T,
}

impl<T: Real> ExperimentSpec<T> {
    /// Checks that `m` is reachable and `P(S_N = m) > 0`.
    pub fn new(joint: JointLatticePmf<T>, n: usize, m: i64, eta0: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParameterOutOfRange("N must be at least 1".into()));
        }
        if !(eta0 > T::zero()) {
            return Err(Error::ParameterOutOfRange(format!("eta0 must be positive, got {eta0}")));
        }
        let px = joint.marginal_x();
        let (lo, hi) = (px.min() * n as i64, px.max() * n as i64);
        if m < lo || m > hi {
            return Err(Error::ParameterOutOfRange(format!("m = {m} outside [{lo}, {hi}]")));
        }
        if !(prob_s_eq_m(&px, n, m)? > T::zero()) {
            return Err(Error::IllConditioned { m, prob: 0.0, budget: 0.0 });
        }
        Ok(Self { joint, n, m, eta0 })
    }

    pub fn joint(&self) -> &JointLatticePmf<T> {
        &self.joint
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn eta0(&self) -> T {
        self.eta0
    }

    /// `P(S_N = m)`.
    pub fn prob_m(&self) -> Result<T> {
        prob_s_eq_m(&self.joint.marginal_x(), self.n, self.m)
    }

    /// `v = (m − N·E[X]) / (σ_X √N)`.
    pub fn v(&self) -> T {
        let mx = moments(&self.joint.marginal_x());
        let nn = T::from_usize_lossy(self.n);
        (T::from_i64_lossy(self.m) - nn * mx.mean) / (mx.sigma * nn.sqrt())
    }

    pub fn conditional(&self) -> Result<ConditionalSlice<T>> {
        conditional_slice(&self.joint, self.n, self.m)
    }
}
