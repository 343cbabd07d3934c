//! Fourier inversion of `ψ(t) = 2π P(S_N = m) E[e^{itU}]` over one period in `s`.

use num_complex::Complex;

use super::{CharFn, ExperimentSpec};
use crate::error::Result;
use crate::lattice::moments;
use crate::quadrature::{integrate_refined, GaussLegendre};
use crate::scalar::Real;

/// Absolute agreement required between two refinement levels.
pub const PSI_TOL: f64 = 1e-10;

const NODES: usize = 10;
const MAX_PANEL: f64 = 0.5;
const MAX_LEVELS: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct BartlettValue<T> {
    pub value: Complex<T>,
    /// Change between the last two refinement levels.
    pub error_estimate: T,
    pub panels: usize,
}

/// `(σ_X√N)^{-1} ∫ e^{−isv} φ^N(s/(σ_X√N), t) ds` over `|s| ≤ π σ_X √N`.
///
/// `t` acts on the raw `T_N`, so `ψ(t)/ψ(0)` is the conditional characteristic function of `U`.
pub fn psi_bartlett<T: Real>(spec: &ExperimentSpec<T>, t: T) -> Result<BartlettValue<T>> {
    let cf = CharFn::new(spec.joint());
    let sigma = moments(&spec.joint().marginal_x()).sigma;
    let nn = T::from_usize_lossy(spec.n());
    let scale = sigma * nn.sqrt();
    let half = T::PI() * scale;
    let v = spec.v();
    let n = spec.n() as u32;
    let panels = ((T::lit(2.0) * half / T::lit(MAX_PANEL)).ceil().as_f64() as usize).max(1);
    let integrand = |s: T| {
        let (sin, cos) = (-s * v).sin_cos();
        Complex::new(cos, sin) * cf.eval(s / scale, t).powu(n)
    };
    let rule = GaussLegendre::new(NODES);
    let r = integrate_refined(
        &rule,
        -half,
        half,
        panels,
        T::lit(PSI_TOL),
        MAX_LEVELS,
        |d: Complex<T>| d.norm(),
        &integrand,
    )?;
    Ok(BartlettValue { value: r.value / scale, error_estimate: r.estimate / scale, panels: r.panels })
}
