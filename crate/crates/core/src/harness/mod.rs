//! Experiment orchestration: rate runs over `N`-grids, slope fits, Monte Carlo checks.

mod io;
mod mc;

pub use io::{read_rate_csv, render_svg, write_law_csv, write_rate_csv, RATE_HEADER};
pub use mc::{dkw_band, dkw_check, mc_conditional_sample, DkwCheck, McSample, MIN_REPS};

use rayon::prelude::*;

use crate::conditional::{deviation_from_law, kolmogorov_distance, Standardization, StandardizationKind};
use crate::error::{Error, Result};
use crate::fourier::{conditional_slice, prob_s_eq_m};
use crate::kv::KvReport;
use crate::lattice::{joint_moments, moments, JointLatticePmf};
use crate::zoo::ModelSpec;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CONDLIMIT_THREADS";

/// Thread pool sized by `CONDLIMIT_THREADS`, or every core when unset.
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::Parse(format!("{THREADS_ENV} = `{raw}` is not a positive integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))
}

/// One `(N, m)` measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub m: i64,
    pub gamma_n: f64,
    pub dist_affine: f64,
    pub dist_natural: f64,
    pub scaled_affine: f64,
    pub scaled_natural: f64,
    /// `NaN` for `N < 3`.
    pub dev1: f64,
    pub dev2: f64,
    pub mc_accept_rate: Option<f64>,
}

/// Rows that succeeded, plus the `N` values that failed and why.
#[derive(Clone, Debug, Default)]
pub struct RateRun {
    pub rows: Vec<RateRow>,
    pub failures: Vec<(usize, String)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateConfig {
    /// When set, each row also runs this many Monte Carlo proposals.
    pub mc_reps: Option<usize>,
    pub seed: u64,
}

/// Computes one row with the exact engine.
pub fn rate_row(model: &ModelSpec, joint: &JointLatticePmf<f64>, n: usize, config: &RateConfig) -> Result<RateRow> {
    let m = model.default_m(joint, n)?;
    let summary = joint_moments(joint)?;
    let px = joint.marginal_x();
    let prob = prob_s_eq_m(&px, n, m)?;
    let root = (n as f64).sqrt();
    let gamma_n = std::f64::consts::TAU * moments(&px).sigma * root * prob;
    let law = conditional_slice(joint, n, m)?.law;
    let affine = kolmogorov_distance(&law, &Standardization::affine(&summary, n, m)?, n)?;
    let natural = kolmogorov_distance(&law, &Standardization::natural(&law)?, n)?;
    let (dev1, dev2) = if n >= 3 {
        let d = deviation_from_law(&law, &summary, n, m);
        (d.dev1, d.dev2)
    } else {
        (f64::NAN, f64::NAN)
    };
    let mc_accept_rate = match config.mc_reps {
        Some(reps) => Some(mc_conditional_sample(joint, n, m, reps, config.seed)?.accept_rate),
        None => None,
    };
    Ok(RateRow {
        n,
        m,
        gamma_n,
        dist_affine: affine.distance,
        dist_natural: natural.distance,
        scaled_affine: affine.scaled,
        scaled_natural: natural.scaled,
        dev1,
        dev2,
        mc_accept_rate,
    })
}

/// One row per `N`; rows are computed in parallel and returned in grid order.
/// A row that fails is recorded in `failures` and the run continues.
pub fn run_rate_experiment(model: &ModelSpec, n_grid: &[usize], config: &RateConfig) -> Result<RateRun> {
    if n_grid.is_empty() {
        return Err(Error::ParameterOutOfRange("empty N grid".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::ParameterOutOfRange(format!("N grid must be positive and strictly increasing: {n_grid:?}")));
    }
    let joint = model.build_joint::<f64>()?.joint;
    let results: Vec<Result<RateRow>> = n_grid.par_iter().map(|&n| rate_row(model, &joint, n, config)).collect();
    let mut run = RateRun::default();
    for (n, r) in n_grid.iter().zip(results) {
        match r {
            Ok(row) => run.rows.push(row),
            Err(e) => run.failures.push((*n, e.to_string())),
        }
    }
    Ok(run)
}

/// A rate run read from a `section.key = value` file:
///
/// ```text
/// rate.model = occupancy:lambda=1
/// rate.n_grid = 16,32,64,128
/// rate.seed = 7
/// rate.mc_reps = 100000
/// ```
///
/// `rate.seed` defaults to 0; `rate.mc_reps` is optional.
#[derive(Clone, Debug, PartialEq)]
pub struct RateJob {
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    pub config: RateConfig,
}

impl RateJob {
    pub fn from_kv(kv: &KvReport) -> Result<Self> {
        let need = |key: &str| kv.get(key).ok_or_else(|| Error::Parse(format!("missing `{key}`")));
        let int = |key: &str, raw: &str| {
            raw.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("`{key}` = `{raw}` is not a non-negative integer")))
        };
        let model = need("rate.model")?.parse()?;
        let n_grid = need("rate.n_grid")?
            .split(',')
            .map(|v| int("rate.n_grid", v).map(|n| n as usize))
            .collect::<Result<Vec<_>>>()?;
        let seed = kv.get("rate.seed").map(|v| int("rate.seed", v)).transpose()?.unwrap_or(0);
        let mc_reps = kv.get("rate.mc_reps").map(|v| int("rate.mc_reps", v).map(|r| r as usize)).transpose()?;
        const KEYS: [&str; 4] = ["rate.model", "rate.n_grid", "rate.seed", "rate.mc_reps"];
        if let Some((k, _)) = kv.entries().iter().find(|(k, _)| !KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key `{k}`")));
        }
        Ok(Self { model, n_grid, config: RateConfig { mc_reps, seed } })
    }

    pub fn run(&self) -> Result<RateRun> {
        run_rate_experiment(&self.model, &self.n_grid, &self.config)
    }
}

/// Least squares of `log distance` on `log N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Smallest distance a row may have to enter a fit.
pub const FIT_FLOOR: f64 = 1e-13;
/// Fewest usable rows for a fit.
pub const FIT_MIN_ROWS: usize = 4;

pub fn fit_points(points: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, d)| *d > FIT_FLOOR).map(|&(n, d)| (n.ln(), d.ln())).collect();
    if pts.len() < FIT_MIN_ROWS {
        return Err(Error::Precondition(format!(
            "{} usable rows; a fit needs {FIT_MIN_ROWS} with distance > {FIT_FLOOR:e}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept: my - slope * mx, r_squared })
}

/// Fits the distances of one standardization.
pub fn fit_rate(rows: &[RateRow], kind: StandardizationKind) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let d = match kind {
                StandardizationKind::Affine => r.dist_affine,
                StandardizationKind::Natural => r.dist_natural,
            };
            (r.n as f64, d)
        })
        .collect();
    fit_points(&pts)
}
