//! Explicit constants of the conditional Berry-Esseen bounds.

use std::f64::consts::{PI, SQRT_2, TAU};

use super::AssumptionReport;
use crate::error::{Error, Result};
use crate::kv::KvReport;
use crate::quadrature::{composite, composite_2d, integrate_refined, GaussLegendre};

/// Constant of the Quine–Robinson derivative bound.
pub const C4: f64 = 161.0;

/// `∫_R |s|^k e^{−a s²} ds = Γ((k+1)/2) / a^{(k+1)/2}`.
pub fn gaussian_moment_closed(k: u32, a: f64) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    libm::tgamma(h) / a.powf(h)
}

/// Cut-off beyond which `|s|^k e^{−a s²}` is below `1e-20` of the integral.
fn gaussian_cutoff(k: u32, a: f64) -> f64 {
    ((60.0 + 4.0 * k as f64) / a).sqrt()
}

/// Same integral by refined Gauss–Legendre on `[0, L]`, doubled; refinement stops on relative change.
pub fn gaussian_moment_quadrature(k: u32, a: f64) -> Result<f64> {
    let rule = GaussLegendre::new(12);
    let f = |s: f64| s.powi(k as i32) * (-a * s * s).exp();
    let cut = gaussian_cutoff(k, a);
    let scale = composite(&rule, 0.0, cut, 16, &f).abs();
    let r = integrate_refined(&rule, 0.0, cut, 16, 1e-14, 10, |d: f64| d.abs() / scale, &f)?;
    Ok(2.0 * r.value)
}

/// `∫∫_{R²} (|s| + |u| + 1)³ e^{−(s² + u²)/24}` by multinomial expansion into Gaussian moments.
pub fn double_integral_closed() -> f64 {
    let mom = |k: u32| gaussian_moment_closed(k, 1.0 / 24.0);
    let fact = |k: u32| (1..=k).product::<u32>() as f64;
    let mut total = 0.0;
    for i in 0..=3 {
        for j in 0..=(3 - i) {
            let rest = 3 - i - j;
            total += fact(3) / (fact(i) * fact(j) * fact(rest)) * mom(i) * mom(j);
        }
    }
    total
}

/// The same double integral by a tensor Gauss–Legendre rule on the positive quadrant.
pub fn double_integral_quadrature(panels: usize) -> f64 {
    let rule = GaussLegendre::new(12);
    let f = |s: f64, u: f64| (s + u + 1.0).powi(3) * (-(s * s + u * u) / 24.0).exp();
    4.0 * composite_2d(&rule, 0.0, gaussian_cutoff(3, 1.0 / 24.0), panels, &f)
}

/// Bounds `c₁, c̃₂, c₂, c₃, c̃₄, c₄, c₅, c₆, c₇, η₀` for the pair `(X, Y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantInputs {
    pub c1: f64,
    pub c2_tilde: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4_tilde: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub eta0: f64,
}

/// Safety factor applied to the smallest observed `γ_n`.
pub const C1_SAFETY: f64 = 0.9;

impl ConstantInputs {
    pub fn from_report(report: &AssumptionReport) -> Self {
        Self::from_reports(std::slice::from_ref(report))
    }

    /// Bounds valid for every report: extreme values over the set, `c₁ = 0.9·min γ_n`,
    /// and `c̃₂ = 1/(4c₃)`.
    pub fn from_reports(reports: &[AssumptionReport]) -> Self {
        let min = |f: fn(&AssumptionReport) -> f64| reports.iter().map(f).fold(f64::INFINITY, f64::min);
        let max = |f: fn(&AssumptionReport) -> f64| reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let c3 = max(|r| r.rho_x_ratio);
        Self {
            c1: C1_SAFETY * min(|r| r.gamma_n),
            c2_tilde: 1.0 / (4.0 * c3),
            c2: max(|r| r.sigma_x),
            c3,
            c4_tilde: min(|r| r.sigma_y),
            c4: max(|r| r.sigma_y),
            c5: max(|r| r.rho_y_ratio),
            c6: max(|r| r.r_abs),
            c7: min(|r| r.c7_est),
            eta0: min(|r| r.eta0),
        }
    }

    fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("c1", self.c1),
            ("c2_tilde", self.c2_tilde),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4_tilde", self.c4_tilde),
            ("c4", self.c4),
            ("c5", self.c5),
            ("c6", self.c6),
            ("c7", self.c7),
            ("eta0", self.eta0),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            let ok = if name == "c6" { (0.0..1.0).contains(&v) } else { v > 0.0 && v.is_finite() };
            if !ok {
                let range = if name == "c6" { "[0, 1)" } else { "(0, inf)" };
                return Err(Error::ParameterOutOfRange(format!("{name} = {v} outside {range}")));
            }
        }
        Ok(())
    }
}

/// Closed form against quadrature for one integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralCheck {
    pub name: &'static str,
    pub closed: f64,
    pub quadrature: f64,
}

impl IntegralCheck {
    pub fn relative_error(&self) -> f64 {
        (self.closed - self.quadrature).abs() / self.closed.abs()
    }
}

/// Every named constant, evaluated from [`ConstantInputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantSet {
    pub inputs: ConstantInputs,
    /// `c̃₄`, `c₄`, `c₅` for `(X, Y′)`; the proofs run on this pair.
    pub c4_tilde_p: f64,
    pub c4_p: f64,
    pub c5_p: f64,
    pub eta: f64,
    /// `min(2/9·c₄c₅, η₀)`, the other reading of `η` inside `C`.
    pub eta_alt: f64,
    pub epsilon: f64,
    pub d1: f64,
    pub d2: f64,
    pub d2pp: f64,
    pub d2ppp: f64,
    pub c1_big: f64,
    pub c2_big: f64,
    pub c2p: f64,
    pub c2pp: f64,
    pub c4_big: f64,
    pub c_final: f64,
    pub c_final_alt: f64,
    pub c_prime: f64,
    pub c_tilde: f64,
    pub integrals: Vec<IntegralCheck>,
}

impl ConstantSet {
    pub fn new(inputs: ConstantInputs) -> Result<Self> {
        inputs.validate()?;
        let ConstantInputs { c1, c2_tilde, c2, c3, c4_tilde, c4, c5, c6, c7, eta0 } = inputs;
        let shrink = 1.0 - c6 * c6;
        let c4_p = c4;
        let c4_tilde_p = c4_tilde * shrink.sqrt();
        let c5_p = shrink.powf(-1.5) * (c3.cbrt() + c5.cbrt()).powi(3);

        let eta = (2.0 / 9.0 / (c4_p * c5_p)).min(eta0);
        let eta_alt = (2.0 / 9.0 * c4_p * c5_p).min(eta0);
        let epsilon = (2.0 / 9.0 / (c2 * c3)).min(PI);

        let g2 = gaussian_moment_closed(2, 2.0 * c7 / 3.0);
        let g4 = gaussian_moment_closed(4, c7 / 3.0);
        let g1 = gaussian_moment_closed(1, 2.0 * c7 / 3.0);
        let dbl = double_integral_closed();

        let d1 = 0.5 * c3.powf(2.0 / 3.0) * c4_p * c5_p.cbrt() / c1 * g2;
        let d2pp = c3.powf(4.0 / 3.0) * c4_p * c4_p * c5_p.powf(2.0 / 3.0) / (4.0 * c1) * g4;
        let d2ppp = c4_p * c4_p / c1 * (c5_p.powf(2.0 / 3.0) * c3.cbrt() + 1.0) * g1;
        let d2 = d1 * d1 + d2pp + d2ppp;

        let c1_big = C4 * (c3 + c5_p) / c1 * dbl;
        let m7 = c7.min(1.0);
        let c2p = (TAU.sqrt() / m7.sqrt() + 4.0 / (m7 * epsilon * c2_tilde)) / (c1 * c7);
        let c2pp = c2_tilde * c2_tilde / 2.0 * c7 * epsilon * epsilon;
        let c2_big = c2p / c2pp.sqrt() * 0.5f64.sqrt() * (-0.5f64).exp();

        let tail = |e: f64| 24.0 / (c4_tilde_p * PI * TAU.sqrt() * e);
        let cap = 12f64.powf(1.5);
        let assemble = |e: f64| (c1_big + c2_big + tail(e)).max(cap * c3).max(cap * c5_p).max(SQRT_2);
        let c_final = assemble(eta);
        let c_final_alt = assemble(eta_alt);

        let b = d1 / c4_tilde_p;
        let c_prime = (d2 / (c4_tilde_p * c4_tilde_p)).max(b) * sup_envelope(b) / TAU.sqrt();
        let c_tilde = c_final + c_prime.max(2.0 * d2 / (c4_tilde_p * c4_tilde_p));

        let integrals = vec![
            IntegralCheck {
                name: "s2_exp_2c7_3",
                closed: g2,
                quadrature: gaussian_moment_quadrature(2, 2.0 * c7 / 3.0)?,
            },
            IntegralCheck { name: "s4_exp_c7_3", closed: g4, quadrature: gaussian_moment_quadrature(4, c7 / 3.0)? },
            IntegralCheck {
                name: "abs_s_exp_2c7_3",
                closed: g1,
                quadrature: gaussian_moment_quadrature(1, 2.0 * c7 / 3.0)?,
            },
            IntegralCheck { name: "double_cubic_exp_24", closed: dbl, quadrature: double_integral_quadrature(48) },
        ];

        Ok(Self {
            inputs,
            c4_tilde_p,
            c4_p,
            c5_p,
            eta,
            eta_alt,
            epsilon,
            d1,
            d2,
            d2pp,
            d2ppp,
            c1_big,
            c2_big,
            c2p,
            c2pp,
            c4_big: C4,
            c_final,
            c_final_alt,
            c_prime,
            c_tilde,
            integrals,
        })
    }

    pub fn to_kv(&self) -> KvReport {
        let mut kv = KvReport::new();
        for (name, v) in self.inputs.fields() {
            kv.push_f64(name, v);
        }
        let named = [
            ("c4_p", self.c4_p),
            ("c4_tilde_p", self.c4_tilde_p),
            ("c5_p", self.c5_p),
            ("eta", self.eta),
            ("eta_alt", self.eta_alt),
            ("epsilon", self.epsilon),
            ("d1", self.d1),
            ("d2", self.d2),
            ("d2pp", self.d2pp),
            ("d2ppp", self.d2ppp),
            ("C1", self.c1_big),
            ("C2", self.c2_big),
            ("C2p", self.c2p),
            ("C2pp", self.c2pp),
            ("C4", self.c4_big),
            ("C_final", self.c_final),
            ("C_final_alt", self.c_final_alt),
            ("C_prime", self.c_prime),
            ("C_tilde", self.c_tilde),
        ];
        for (name, v) in named {
            kv.push_f64(name, v);
        }
        kv
    }
}

/// `sup_x (|x| + 1) e^{−(|x|/2 − b)²/2}`; the interior critical point solves a quadratic.
fn sup_envelope(b: f64) -> f64 {
    let g = |x: f64| (x + 1.0) * (-(x / 2.0 - b).powi(2) / 2.0).exp();
    let lin = 1.0 - 2.0 * b;
    let x_star = (-lin + (lin * lin + 8.0 * (b + 2.0)).sqrt()) / 2.0;
    g(x_star.max(0.0)).max(g(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs() -> ConstantInputs {
        ConstantInputs {
            c1: 2.2,
            c2_tilde: 0.14,
            c2: 1.0,
            c3: 1.74,
            c4_tilde: 0.48,
            c4: 0.49,
            c5: 1.2,
            c6: 0.77,
            c7: 0.1,
            eta0: 1.0,
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        assert_relative_eq!(gaussian_moment_closed(2, 1.0 / 3.0), 4.604_970_185_759_198, max_relative = 1e-14);
        let a = 0.7;
        assert_relative_eq!(gaussian_moment_closed(2, a), PI.sqrt() / (2.0 * a.powf(1.5)), max_relative = 1e-14);
        assert_relative_eq!(gaussian_moment_closed(1, a), 1.0 / a, max_relative = 1e-14);
        assert_relative_eq!(gaussian_moment_closed(4, a), 3.0 * PI.sqrt() / (4.0 * a.powf(2.5)), max_relative = 1e-14);
    }

    #[test]
    fn double_integral_value() {
        assert_relative_eq!(double_integral_closed(), 35_218.112_654_499_73, max_relative = 1e-14);
        assert_relative_eq!(double_integral_quadrature(48), double_integral_closed(), max_relative = 1e-12);
    }

    #[test]
    fn min_branches() {
        let mut i = inputs();
        i.c4 = 1.0;
        i.c5 = 1.0;
        i.c6 = 0.0;
        i.c3 = 1.0;
        i.eta0 = 10.0;
        let c = ConstantSet::new(i).unwrap();
        // c5' = (1 + 1)³ = 8
        assert_relative_eq!(c.c5_p, 8.0, max_relative = 1e-15);
        assert_relative_eq!(c.eta, 2.0 / 9.0 / 8.0, max_relative = 1e-15);
        i.c2 = 100.0;
        let c = ConstantSet::new(i).unwrap();
        assert_relative_eq!(c.epsilon, 2.0 / 900.0, max_relative = 1e-15);
        i.c2 = 0.01;
        assert_eq!(ConstantSet::new(i).unwrap().epsilon, PI);
    }

    #[test]
    fn assembled_values() {
        let c = ConstantSet::new(inputs()).unwrap();
        assert_eq!(c.d2, c.d1 * c.d1 + c.d2pp + c.d2ppp);
        assert!(c.c_tilde > c.c_final);
        assert!(c.c_final >= 12f64.powf(1.5) * c.c5_p);
        for chk in &c.integrals {
            assert!(chk.relative_error() < 1e-10, "{}: {}", chk.name, chk.relative_error());
        }
    }

    #[test]
    fn envelope_is_a_maximum() {
        for b in [0.0, 0.3, 2.0, 10.0] {
            let s = sup_envelope(b);
            let grid = (0..20000).map(|i| i as f64 * 0.005).map(|x| (x + 1.0) * (-(x / 2.0 - b).powi(2) / 2.0).exp());
            let best = grid.fold(0.0, f64::max);
            assert!(s >= best - 1e-12 && s <= best + 1e-4, "b={b}: {s} vs {best}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut i = inputs();
        i.c6 = 1.0;
        assert!(ConstantSet::new(i).is_err());
        let mut i = inputs();
        i.c7 = 0.0;
        assert!(ConstantSet::new(i).is_err());
    }
}
