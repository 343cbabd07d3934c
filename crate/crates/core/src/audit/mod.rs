//! Numerical audit of the assumptions (A1)–(A7), the explicit constants, and grid
//! checks of the characteristic-function lemmas.

mod constants;
mod lemmas;

pub use constants::{
    double_integral_closed, double_integral_quadrature, gaussian_moment_closed, gaussian_moment_quadrature,
    ConstantInputs, ConstantSet, IntegralCheck, C4,
};
pub use lemmas::{
    check_dphi_bounds, check_phi_power_bound, check_qr_lemma, DphiSlack, LemmaGrid, QrStatus, QR_THRESHOLD,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{CharFn, ExperimentSpec};
use crate::kv::KvReport;
use crate::lattice::{joint_moments, moments, project_y_prime, JointLatticePmf, ProjectionParams};
use crate::scalar::Real;

/// Largest accepted grid pitch for the `c₇` scan.
pub const MAX_PITCH: f64 = 0.01;

/// Evaluation grids: `pitch` for the `c₇` scan, `points` per axis for lemma checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub pitch: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { pitch: MAX_PITCH, points: 200 }
    }
}

impl GridSpec {
    pub fn new(pitch: f64, points: usize) -> Result<Self> {
        if !(pitch > 0.0 && pitch <= MAX_PITCH) {
            return Err(Error::ParameterOutOfRange(format!("grid pitch {pitch} outside (0, {MAX_PITCH}]")));
        }
        if points < 2 {
            return Err(Error::ParameterOutOfRange("lemma grids need at least 2 points per axis".into()));
        }
        Ok(Self { pitch, points })
    }
}

/// Audited quantities for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub n: usize,
    pub m: i64,
    pub prob_m: f64,
    pub gamma_n: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho_x_ratio: f64,
    pub rho_y_ratio: f64,
    pub r_abs: f64,
    /// Standard deviation of `Y′`.
    pub tau: f64,
    /// `ρ_{Y′}/τ³`.
    pub rho_yp_ratio: f64,
    pub c7_est: f64,
    pub eta0: f64,
    pub grid_pitch: f64,
    pub l1: f64,
    /// Computed for `Y′`, the variable the lemma is applied to.
    pub l2: f64,
    pub span_ok: bool,
    pub violations: Vec<String>,
}

const REPORT_FIELDS: [&str; 16] = [
    "N",
    "m",
    "prob_m",
    "gamma_n",
    "sigma_x",
    "sigma_y",
    "rho_x_ratio",
    "rho_y_ratio",
    "r_abs",
    "tau",
    "rho_yp_ratio",
    "c7_est",
    "eta0",
    "grid_pitch",
    "l1",
    "l2",
];

impl AssumptionReport {
    fn floats(&self) -> [f64; 14] {
        [
            self.prob_m,
            self.gamma_n,
            self.sigma_x,
            self.sigma_y,
            self.rho_x_ratio,
            self.rho_y_ratio,
            self.r_abs,
            self.tau,
            self.rho_yp_ratio,
            self.c7_est,
            self.eta0,
            self.grid_pitch,
            self.l1,
            self.l2,
        ]
    }

    pub fn to_kv(&self) -> KvReport {
        let mut kv = KvReport::new();
        kv.push("N", self.n);
        kv.push("m", self.m);
        for (name, v) in REPORT_FIELDS[2..].iter().zip(self.floats()) {
            kv.push_f64(name, v);
        }
        kv.push("span_ok", self.span_ok);
        kv.push("violations", self.violations.join(";"));
        kv
    }

    pub fn from_kv(kv: &KvReport) -> Result<Self> {
        let int = |k: &str| -> Result<i64> {
            let raw = kv.get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")))?;
            raw.parse().map_err(|_| Error::Parse(format!("`{k}` = `{raw}` is not an integer")))
        };
        let f = |k: &str| kv.get_f64(k);
        let span = kv.get("span_ok").ok_or_else(|| Error::Parse("missing key `span_ok`".into()))?;
        Ok(Self {
            n: int("N")? as usize,
            m: int("m")?,
            prob_m: f("prob_m")?,
            gamma_n: f("gamma_n")?,
            sigma_x: f("sigma_x")?,
            sigma_y: f("sigma_y")?,
            rho_x_ratio: f("rho_x_ratio")?,
            rho_y_ratio: f("rho_y_ratio")?,
            r_abs: f("r_abs")?,
            tau: f("tau")?,
            rho_yp_ratio: f("rho_yp_ratio")?,
            c7_est: f("c7_est")?,
            eta0: f("eta0")?,
            grid_pitch: f("grid_pitch")?,
            l1: f("l1")?,
            l2: f("l2")?,
            span_ok: span.parse().map_err(|_| Error::Parse(format!("span_ok = `{span}`")))?,
            violations: kv
                .get("violations")
                .unwrap_or("")
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        })
    }
}

/// Audits (A1)–(A7) for one experiment.
pub fn audit<T: Real>(spec: &ExperimentSpec<T>, grid: &GridSpec) -> Result<AssumptionReport> {
    let joint = spec.joint();
    let summary = joint_moments(joint)?;
    let proj = project_y_prime(joint)?;
    let n = spec.n();
    let sqrt_n = (n as f64).sqrt();
    let prob_m = spec.prob_m()?.as_f64();
    let sigma_x = summary.sigma_x.as_f64();
    let sigma_y = summary.sigma_y.as_f64();
    let rho_x_ratio = summary.rho_x.as_f64() / sigma_x.powi(3);
    let rho_y_ratio = summary.rho_y.as_f64() / sigma_y.powi(3);
    let r_abs = summary.r.abs().as_f64();
    let tau = proj.tau.as_f64();
    let rho_yp_ratio =
        if proj.is_degenerate() { f64::INFINITY } else { proj.moments(joint).rho.as_f64() / tau.powi(3) };
    let eta0 = spec.eta0().as_f64();
    let c7_est = estimate_c7(joint, &proj, eta0, grid)?;
    let gamma_n = std::f64::consts::TAU * sigma_x * sqrt_n * prob_m;
    let span_ok = joint.marginal_x().span() == 1;

    let mut violations = Vec::new();
    if !(gamma_n > 0.0) {
        violations.push("A1: gamma_n = 0".to_string());
    }
    if proj.is_degenerate() {
        violations.push("A4: Y' is constant (Y affine in X)".to_string());
    }
    if !(r_abs < 1.0 - 1e-12) {
        violations.push(format!("A6: |r| = {r_abs}"));
    }
    if !(c7_est > 0.0) {
        violations.push("A7: no positive c7 on the grid".to_string());
    }
    if !span_ok {
        violations.push("span of X is not 1".to_string());
    }
    Ok(AssumptionReport {
        n,
        m: spec.m(),
        prob_m,
        gamma_n,
        sigma_x,
        sigma_y,
        rho_x_ratio,
        rho_y_ratio,
        r_abs,
        tau,
        rho_yp_ratio,
        c7_est,
        eta0,
        grid_pitch: grid.pitch,
        l1: rho_x_ratio / sqrt_n,
        l2: rho_yp_ratio / sqrt_n,
        span_ok,
        violations,
    })
}

/// `(1 − |φ(s, t)|) / (σ_X² s² + σ_{Y′}² t²)` for the projected characteristic function.
pub fn c7_ratio<T: Real>(cf: &CharFn<T>, sx2: f64, sy2: f64, s: f64, t: f64) -> f64 {
    let modulus = cf.eval(T::lit(s), T::lit(t)).norm().as_f64();
    (1.0 - modulus) / (sx2 * s * s + sy2 * t * t)
}

/// Multiples of `pitch` strictly inside `(-half, half)`, plus both endpoints.
fn axis(half: f64, pitch: f64) -> Vec<f64> {
    let k = (half / pitch).ceil() as i64;
    let mut pts: Vec<f64> = (-k..=k).map(|i| i as f64 * pitch).filter(|x| x.abs() < half).collect();
    pts.insert(0, -half);
    pts.push(half);
    pts
}

/// Infimum over the grid of `(1 − |E e^{i(sX + tY′)}|) / (σ_X² s² + σ_{Y′}² t²)`, floored at 0.
///
/// `s` covers `[−π, π]` and `t` covers `[−η₀, η₀]`; the origin is skipped. Returns 0
/// when `Y′` is degenerate.
pub fn estimate_c7<T: Real>(
    joint: &JointLatticePmf<T>,
    proj: &ProjectionParams<T>,
    eta0: f64,
    grid: &GridSpec,
) -> Result<f64> {
    if !(grid.pitch > 0.0 && grid.pitch <= MAX_PITCH) {
        return Err(Error::ParameterOutOfRange(format!("grid pitch {} outside (0, {MAX_PITCH}]", grid.pitch)));
    }
    if proj.is_degenerate() {
        return Ok(0.0);
    }
    let cf = CharFn::projected(joint, proj);
    let sx2 = moments(&joint.marginal_x()).sigma.as_f64().powi(2);
    let sy2 = proj.tau.as_f64().powi(2);
    let s_axis = axis(std::f64::consts::PI, grid.pitch);
    let t_axis = axis(eta0, grid.pitch);
    let inf = s_axis
        .par_iter()
        .map(|&s| {
            let mut best = f64::INFINITY;
            for &t in &t_axis {
                if s == 0.0 && t == 0.0 {
                    continue;
                }
                best = best.min(c7_ratio(&cf, sx2, sy2, s, t));
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(inf.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{truncate_family, Family, LatticePmf, TailTolerance};
    use approx::assert_abs_diff_eq;

    fn occupancy() -> JointLatticePmf<f64> {
        let px = truncate_family(Family::Poisson { lambda: 1.0 }, TailTolerance::DEFAULT).unwrap();
        JointLatticePmf::deterministic(&px, |x| (x == 0) as i64).unwrap()
    }

    #[test]
    fn occupancy_gamma() {
        let spec = ExperimentSpec::new(occupancy(), 100, 100, 1.0).unwrap();
        let r = audit(&spec, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(r.gamma_n, 2.504_540_294_807_656_5, epsilon = 1e-12);
        assert!(r.c7_est > 0.0);
        assert!(r.span_ok);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
    }

    #[test]
    fn span_two_flagged() {
        let px = LatticePmf::new(0, vec![0.3, 0.0, 0.3, 0.0, 0.4], 0.0).unwrap();
        let py = LatticePmf::new(0, vec![0.5, 0.5], 0.0).unwrap();
        let j = JointLatticePmf::independent(&px, &py).unwrap();
        let spec = ExperimentSpec::new(j, 3, 4, 1.0).unwrap();
        let r = audit(&spec, &GridSpec::default()).unwrap();
        assert!(!r.span_ok);
    }

    #[test]
    fn identity_flags_correlation() {
        let px = truncate_family(Family::Poisson { lambda: 1.0 }, TailTolerance::DEFAULT).unwrap();
        let j = JointLatticePmf::deterministic(&px, |x| x).unwrap();
        let spec = ExperimentSpec::new(j, 10, 10, 1.0).unwrap();
        let r = audit(&spec, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(r.r_abs, 1.0, epsilon = 1e-12);
        assert!(r.violations.iter().any(|v| v.starts_with("A6")));
        assert_eq!(r.c7_est, 0.0);
    }

    #[test]
    fn coin_c7_closed_form() {
        let coin = LatticePmf::new(0, vec![0.5, 0.5], 0.0).unwrap();
        let py = LatticePmf::new(0, vec![0.5, 0.5], 0.0).unwrap();
        let j = JointLatticePmf::independent(&coin, &py).unwrap();
        let proj = project_y_prime(&j).unwrap();
        let cf = CharFn::projected(&j, &proj);
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(c7_ratio(&cf, 0.25, 0.25, pi, 0.0), 0.405_284_734_569_351_1, epsilon = 1e-12);
        assert_abs_diff_eq!(c7_ratio(&cf, 0.25, 0.25, 1e-4, 0.0), 0.5, epsilon = 1e-6);
        // |φ| vanishes on s = ±π, so the infimum is the corner (π, η₀)
        let c7 = estimate_c7(&j, &proj, 1.0, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(c7, 4.0 / (pi * pi + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn refining_never_increases_c7() {
        let j = occupancy();
        let proj = project_y_prime(&j).unwrap();
        let coarse = estimate_c7(&j, &proj, 1.0, &GridSpec::new(0.01, 2).unwrap()).unwrap();
        let fine = estimate_c7(&j, &proj, 1.0, &GridSpec::new(0.005, 2).unwrap()).unwrap();
        assert!(fine <= coarse);
    }

    #[test]
    fn report_round_trip() {
        let spec = ExperimentSpec::new(occupancy(), 16, 16, 1.0).unwrap();
        let r = audit(&spec, &GridSpec::default()).unwrap();
        let back = AssumptionReport::from_kv(&r.to_kv().to_string().parse().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
