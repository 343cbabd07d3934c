//! The classical conditioned models as joint lattice laws, with brute-force oracles.

mod families;
mod hashing;
mod oracles;

pub use families::{borel_pmf, geometric_pmf, indicator_joint, occupancy_joint, poisson_pmf};
pub use hashing::{
    displacement_enumerate, displacement_histogram, displacement_table_enumerate, hashing_joint, hashing_simulate,
    MAX_EXACT_L, MIN_MC_SAMPLES,
};
pub use oracles::{bose_einstein_oracle, branching_oracle, occupancy_oracle, BranchingReport, MAX_BRANCHING_N};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fourier::prob_s_eq_m;
use crate::lattice::{moments, JointLatticePmf, LatticePmf, TailTolerance};
use crate::scalar::Real;

/// A joint law together with how it was obtained.
#[derive(Clone, Debug)]
pub struct ModelJoint<T> {
    pub joint: JointLatticePmf<T>,
    /// Some rows are Monte Carlo histograms.
    pub approximate: bool,
    /// Largest per-atom standard error of the simulated rows (0 when exact).
    pub std_error: f64,
}

/// The statistic `f` in `U = Σ f(Z_i)` for Bose-Einstein allocations.
#[derive(Clone, Debug, PartialEq)]
pub enum Statistic {
    Identity,
    /// `1{z = level}`; `empty` is level 0.
    Indicator(i64),
    /// Explicit finite map; unlisted values map to 0.
    Map(BTreeMap<i64, i64>),
}

impl Statistic {
    pub fn apply(&self, z: i64) -> i64 {
        match self {
            Statistic::Identity => z,
            Statistic::Indicator(level) => (z == *level) as i64,
            Statistic::Map(map) => map.get(&z).copied().unwrap_or(0),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Identity => write!(f, "identity"),
            Statistic::Indicator(0) => write!(f, "empty"),
            Statistic::Indicator(k) => write!(f, "eq{k}"),
            Statistic::Map(map) => {
                let parts: Vec<String> = map.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                write!(f, "{}", parts.join(";"))
            }
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown statistic `{s}`"));
        match s {
            "identity" => return Ok(Statistic::Identity),
            "empty" => return Ok(Statistic::Indicator(0)),
            _ => {}
        }
        if let Some(level) = s.strip_prefix("eq") {
            return level.parse().map(Statistic::Indicator).map_err(|_| bad());
        }
        let mut map = BTreeMap::new();
        for pair in s.split(';') {
            let (k, v) = pair.split_once(':').ok_or_else(bad)?;
            map.insert(k.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?);
        }
        Ok(Statistic::Map(map))
    }
}

/// Offspring laws with mean 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offspring {
    /// Poisson(1), truncated.
    Poisson1,
    /// Uniform on `{0, 2}`.
    Uniform02,
    /// `{0: 1/4, 1: 1/2, 2: 1/4}`.
    Lazy,
}

impl Offspring {
    pub fn pmf<T: Real>(&self, tol: TailTolerance) -> Result<LatticePmf<T>> {
        match self {
            Offspring::Poisson1 => poisson_pmf(1.0, tol),
            Offspring::Uniform02 => LatticePmf::new(0, vec![T::lit(0.5), T::zero(), T::lit(0.5)], T::zero()),
            Offspring::Lazy => LatticePmf::new(0, vec![T::lit(0.25), T::lit(0.5), T::lit(0.25)], T::zero()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Offspring::Poisson1 => "poisson1",
            Offspring::Uniform02 => "uniform02",
            Offspring::Lazy => "lazy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// `X ~ Poisson(λ)`, `Y = 1{X = 0}`.
    Occupancy { lambda: f64 },
    /// `X ~ G(p)` on `{0, 1, ...}`, `Y = f(X)`.
    BoseEinstein { p: f64, f: Statistic },
    /// `X` an offspring law, `Y = 1{X = K}`, conditioned on `S_N = N − 1`.
    Branching { offspring: Offspring, k: i64 },
    /// `X ~ Borel(μ)`, `Y = 1{X = K}`.
    RandomForest { mu: f64, k: i64 },
    /// `X ~ Borel(μ)`, `Y | X = l ~ d_{l,l−1}`.
    Hashing { mu: f64, lmax: usize, mc: usize, seed: u64 },
}

/// A model plus the tail tolerance used to truncate infinite supports.
///
/// Grammar: `name:key=value,...`, e.g. `occupancy:lambda=1.0`, `bose:p=0.5,f=identity`,
/// `branching:offspring=poisson1,K=3`, `forest:mu=0.5,K=2`,
/// `hashing:mu=0.5,lmax=8,mc=100000`. Every model accepts `tol=<real>`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub tail_tol: TailTolerance,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, tail_tol: TailTolerance::DEFAULT }
    }

    pub fn build_joint<T: Real>(&self) -> Result<ModelJoint<T>> {
        let tol = self.tail_tol;
        let exact = |joint| Ok(ModelJoint { joint, approximate: false, std_error: 0.0 });
        match &self.kind {
            ModelKind::Occupancy { lambda } => exact(occupancy_joint(*lambda, tol)?),
            ModelKind::BoseEinstein { p, f } => {
                exact(JointLatticePmf::deterministic(&geometric_pmf(*p, tol)?, |z| f.apply(z))?)
            }
            ModelKind::Branching { offspring, k } => exact(indicator_joint(&offspring.pmf(tol)?, *k)?),
            ModelKind::RandomForest { mu, k } => exact(indicator_joint(&borel_pmf(*mu, tol)?, *k)?),
            ModelKind::Hashing { mu, lmax, mc, seed } => hashing_joint(*mu, *lmax, *mc, *seed, tol),
        }
    }

    /// `N − 1` for branching; otherwise `round(N·E[X])`, moved by at most 3 if that
    /// point has probability 0.
    pub fn default_m<T: Real>(&self, joint: &JointLatticePmf<T>, n: usize) -> Result<i64> {
        let px = joint.marginal_x();
        if let ModelKind::Branching { .. } = self.kind {
            return Ok(n as i64 - 1);
        }
        let center = (T::from_usize_lossy(n) * moments(&px).mean).round().as_f64() as i64;
        for delta in [0i64, 1, -1, 2, -2, 3, -3] {
            if prob_s_eq_m(&px, n, center + delta)? > T::zero() {
                return Ok(center + delta);
            }
        }
        Err(Error::IllConditioned { m: center, prob: 0.0, budget: 0.0 })
    }
}

fn parse_ratio(raw: &str) -> Option<f64> {
    match raw.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => raw.parse().ok(),
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: BTreeMap<String, String> = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) =
                item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| params.remove(key);
        let num = |key: &str, raw: Option<String>, default: Option<f64>| -> Result<f64> {
            match raw {
                Some(r) => parse_ratio(&r).ok_or_else(|| Error::Parse(format!("`{key}` = `{r}` is not a number"))),
                None => default.ok_or_else(|| Error::Parse(format!("missing `{key}` for model `{name}`"))),
            }
        };
        let int = |key: &str, raw: Option<String>, default: Option<i64>| -> Result<i64> {
            match raw {
                Some(r) => r.parse().map_err(|_| Error::Parse(format!("`{key}` = `{r}` is not an integer"))),
                None => default.ok_or_else(|| Error::Parse(format!("missing `{key}` for model `{name}`"))),
            }
        };
        let tail_tol = TailTolerance::new(num("tol", take("tol"), Some(TailTolerance::DEFAULT.get()))?)?;
        let kind = match name.trim() {
            "occupancy" => ModelKind::Occupancy { lambda: num("lambda", take("lambda"), Some(1.0))? },
            "bose" => ModelKind::BoseEinstein {
                p: num("p", take("p"), Some(0.5))?,
                f: take("f").as_deref().unwrap_or("identity").parse()?,
            },
            "branching" => {
                let offspring = match take("offspring").as_deref().unwrap_or("poisson1") {
                    "poisson1" => Offspring::Poisson1,
                    "uniform02" => Offspring::Uniform02,
                    "lazy" => Offspring::Lazy,
                    other => return Err(Error::Parse(format!("unknown offspring law `{other}`"))),
                };
                ModelKind::Branching { offspring, k: int("K", take("K"), Some(0))? }
            }
            "forest" => {
                ModelKind::RandomForest { mu: num("mu", take("mu"), Some(0.5))?, k: int("K", take("K"), Some(1))? }
            }
            "hashing" => ModelKind::Hashing {
                mu: num("mu", take("mu"), Some(0.5))?,
                lmax: int("lmax", take("lmax"), Some(MAX_EXACT_L as i64))? as usize,
                mc: int("mc", take("mc"), Some(0))? as usize,
                seed: int("seed", take("seed"), Some(0))? as u64,
            },
            other => return Err(Error::Parse(format!("unknown model `{other}`"))),
        };
        if let Some(k) = params.keys().next() {
            return Err(Error::Parse(format!("unknown parameter `{k}` for model `{name}`")));
        }
        let spec = Self { kind, tail_tol };
        spec.validate()?;
        Ok(spec)
    }
}

impl ModelSpec {
    fn validate(&self) -> Result<()> {
        let ok = match &self.kind {
            ModelKind::Occupancy { lambda } => *lambda > 0.0 && lambda.is_finite(),
            ModelKind::BoseEinstein { p, .. } => *p > 0.0 && *p < 1.0,
            ModelKind::Branching { k, .. } => *k >= 0,
            ModelKind::RandomForest { mu, k } => *mu > 0.0 && *mu < 1.0 && *k >= 1,
            ModelKind::Hashing { mu, lmax, .. } => *mu > 0.0 && *mu < 1.0 && (1..=MAX_EXACT_L).contains(lmax),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(format!("model parameters out of range: {self}")))
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Occupancy { lambda } => write!(f, "occupancy:lambda={lambda}")?,
            ModelKind::BoseEinstein { p, f: stat } => write!(f, "bose:p={p},f={stat}")?,
            ModelKind::Branching { offspring, k } => write!(f, "branching:offspring={},K={k}", offspring.name())?,
            ModelKind::RandomForest { mu, k } => write!(f, "forest:mu={mu},K={k}")?,
            ModelKind::Hashing { mu, lmax, mc, seed } => write!(f, "hashing:mu={mu},lmax={lmax},mc={mc},seed={seed}")?,
        }
        if self.tail_tol != TailTolerance::DEFAULT {
            write!(f, ",tol={}", self.tail_tol.get())?;
        }
        Ok(())
    }
}
