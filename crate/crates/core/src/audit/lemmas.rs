//! Grid checks of the bounds on `φ^{N−l}`, `∂φ/∂t`, and the Quine–Robinson derivative.
//!
//! All checks run on the pair `(X − E[X], Y′)` with the arguments rescaled as
//! `(s/(σ_X√N), t/(τ√N))`.

use num_complex::Complex;
use rayon::prelude::*;

use super::{AssumptionReport, C4};
use crate::error::{Error, Result};
use crate::fourier::{linspace, CharFn, ExperimentSpec};
use crate::lattice::{moments, project_y_prime};
use crate::scalar::Real;

/// Rectangle `[−s_max, s_max] × [−t_max, t_max]` sampled with `points` per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaGrid {
    pub s_max: f64,
    pub t_max: f64,
    pub points: usize,
}

struct Scaled<T> {
    cf: CharFn<T>,
    sx: f64,
    tau: f64,
    n: usize,
}

impl<T: Real> Scaled<T> {
    fn new(spec: &ExperimentSpec<T>) -> Result<Self> {
        let proj = project_y_prime(spec.joint())?;
        if proj.is_degenerate() {
            return Err(Error::Degenerate("Y' is constant; the lemmas need tau > 0".into()));
        }
        let root = (spec.n() as f64).sqrt();
        Ok(Self {
            cf: CharFn::projected(spec.joint(), &proj),
            sx: moments(&spec.joint().marginal_x()).sigma.as_f64() * root,
            tau: proj.tau.as_f64() * root,
            n: spec.n(),
        })
    }

    /// `(φ, ∂φ/∂t)` at the rescaled point.
    fn at(&self, s: f64, t: f64) -> (Complex<f64>, Complex<f64>) {
        let (p, d) = self.cf.eval_with_dt(T::lit(s / self.sx), T::lit(t / self.tau));
        (Complex::new(p.re.as_f64(), p.im.as_f64()), Complex::new(d.re.as_f64(), d.im.as_f64()))
    }

    /// The domain `|s| ≤ π σ_X √N`, `|t| ≤ η₀ τ √N`.
    fn domain(&self, eta0: f64, points: usize) -> LemmaGrid {
        LemmaGrid { s_max: std::f64::consts::PI * self.sx, t_max: eta0 * self.tau, points }
    }
}

fn grid_min<F: Fn(f64, f64) -> f64 + Sync>(grid: &LemmaGrid, f: F) -> f64 {
    let s_pts = linspace(-grid.s_max, grid.s_max, grid.points);
    let t_pts = linspace(-grid.t_max, grid.t_max, grid.points);
    s_pts
        .par_iter()
        .map(|&s| t_pts.iter().map(|&t| f(s, t)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Minimum over the grid of `exp{−(s² + t²) c₇ (N − l)/N} − |φ^{N−l}|`, with `c₇` from the audit.
pub fn check_phi_power_bound<T: Real>(
    spec: &ExperimentSpec<T>,
    report: &AssumptionReport,
    l: usize,
    points: usize,
) -> Result<f64> {
    if l > spec.n() {
        return Err(Error::ParameterOutOfRange(format!("l = {l} exceeds N = {}", spec.n())));
    }
    let sc = Scaled::new(spec)?;
    let grid = sc.domain(spec.eta0().as_f64(), points);
    let k = (sc.n - l) as i32;
    let frac = k as f64 / sc.n as f64;
    Ok(grid_min(&grid, |s, t| {
        let lhs = sc.at(s, t).0.norm().powi(k);
        (-(s * s + t * t) * report.c7_est * frac).exp() - lhs
    }))
}

/// Slack of the first-order and second-order bounds on `|∂φ/∂t|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DphiSlack {
    pub first_order: f64,
    pub second_order: f64,
}

pub fn check_dphi_bounds<T: Real>(
    spec: &ExperimentSpec<T>,
    report: &AssumptionReport,
    points: usize,
) -> Result<DphiSlack> {
    let sc = Scaled::new(spec)?;
    let grid = sc.domain(spec.eta0().as_f64(), points);
    let nn = sc.n as f64;
    let sy = report.tau;
    let a = report.rho_x_ratio;
    let b = report.rho_yp_ratio;
    let first_order = grid_min(&grid, |s, t| sy / nn.sqrt() * (s.abs() + t.abs()) - sc.at(s, t).1.norm());
    let second_order = grid_min(&grid, |s, t| {
        let quad =
            s * s / 2.0 * a.powf(2.0 / 3.0) * b.cbrt() + (s * t).abs() * a.cbrt() * b.powf(2.0 / 3.0) + t * t / 2.0 * b;
        sy / nn.sqrt() * t.abs() + sy / nn * quad - sc.at(s, t).1.norm()
    });
    Ok(DphiSlack { first_order, second_order })
}

#[derive(Clone, Debug, PartialEq)]
pub enum QrStatus {
    Checked { slack: f64, grid: LemmaGrid },
    Skipped { reason: String },
}

/// Threshold on `l₁`, `l₂`.
pub const QR_THRESHOLD: f64 = 0.024056261216234408; // 12^{-3/2}

/// Minimum over `R ∩ domain` of
/// `161 (|s|+|t|+1)³ (l₁+l₂) e^{11(s²+t²)/24} − |∂/∂t [e^{(s²+t²)/2} φ^N]|`.
pub fn check_qr_lemma<T: Real>(spec: &ExperimentSpec<T>, report: &AssumptionReport, points: usize) -> Result<QrStatus> {
    if report.l1 > QR_THRESHOLD || report.l2 > QR_THRESHOLD {
        return Ok(QrStatus::Skipped {
            reason: format!(
                "l1 = {:.4e}, l2 = {:.4e}; both must be <= 12^(-3/2) = {QR_THRESHOLD:.4e}",
                report.l1, report.l2
            ),
        });
    }
    let sc = Scaled::new(spec)?;
    let dom = sc.domain(spec.eta0().as_f64(), points);
    // R is open; stay a hair inside it
    let inside = 1.0 - 1e-9;
    let grid = LemmaGrid {
        s_max: dom.s_max.min(2.0 / (9.0 * report.l1) * inside),
        t_max: dom.t_max.min(2.0 / (9.0 * report.l2) * inside),
        points,
    };
    let n = sc.n as u32;
    let rate = report.l1 + report.l2;
    let slack = grid_min(&grid, |s, t| {
        let r2 = s * s + t * t;
        let (p, d) = sc.at(s, t);
        let pn1 = p.powu(n - 1);
        let deriv = (p * pn1 * t + pn1 * d * (sc.n as f64 / sc.tau)) * (r2 / 2.0).exp();
        C4 * (s.abs() + t.abs() + 1.0).powi(3) * rate * (11.0 * r2 / 24.0).exp() - deriv.norm()
    });
    Ok(QrStatus::Checked { slack, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{audit, GridSpec};
    use crate::lattice::{truncate_family, Family, JointLatticePmf, TailTolerance};

    fn spec(n: usize) -> ExperimentSpec<f64> {
        let px = truncate_family(Family::Poisson { lambda: 1.0 }, TailTolerance::DEFAULT).unwrap();
        let j = JointLatticePmf::deterministic(&px, |x| (x == 0) as i64).unwrap();
        ExperimentSpec::new(j, n, n as i64, 1.0).unwrap()
    }

    #[test]
    fn threshold_value() {
        assert!((QR_THRESHOLD - 12f64.powf(-1.5)).abs() < 1e-17);
    }

    #[test]
    fn occupancy_power_bound_holds() {
        let s = spec(64);
        let r = audit(&s, &GridSpec::default()).unwrap();
        assert!(check_phi_power_bound(&s, &r, 1, 101).unwrap() >= -1e-12);
        assert!(check_phi_power_bound(&s, &r, 64, 21).unwrap() >= 0.0);
        let d = check_dphi_bounds(&s, &r, 101).unwrap();
        assert!(d.first_order >= -1e-12 && d.second_order >= -1e-12, "{d:?}");
    }

    #[test]
    fn qr_skipped_for_small_n() {
        let s = spec(64);
        let r = audit(&s, &GridSpec::default()).unwrap();
        assert!(matches!(check_qr_lemma(&s, &r, 10).unwrap(), QrStatus::Skipped { .. }));
    }
}
