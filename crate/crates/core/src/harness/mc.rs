//! Rejection sampling of `T_N` given `S_N = m`, and the DKW band check.

use rand::distributions::Distribution;
use rand_distr::WeightedAliasIndex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{JointLatticePmf, LatticePmf};
use crate::rng::stream_rng;

/// Fewest proposals accepted by [`mc_conditional_sample`].
pub const MIN_REPS: usize = 10_000;
/// Proposals drawn from one random stream.
const BLOCK: usize = 1024;
/// When nothing is accepted, proposals are extended up to this multiple of `reps`.
const EXTENSION: usize = 10;

#[derive(Clone, Debug)]
pub struct McSample {
    /// Empirical law of the accepted `T_N`.
    pub law: LatticePmf<f64>,
    pub accepted: usize,
    pub proposals: usize,
    pub accept_rate: f64,
}

/// Draws `reps` proposals of `N` i.i.d. pairs and keeps `T_N` whenever `S_N = m`.
///
/// Proposal block `b` uses the stream `(seed, N, b)`, so results do not depend on the
/// number of workers.
pub fn mc_conditional_sample(
    joint: &JointLatticePmf<f64>,
    n: usize,
    m: i64,
    reps: usize,
    seed: u64,
) -> Result<McSample> {
    if reps < MIN_REPS {
        return Err(Error::ParameterOutOfRange(format!("reps = {reps}; at least {MIN_REPS} are required")));
    }
    let atoms: Vec<(i64, i64, f64)> = joint.atoms().collect();
    let alias = WeightedAliasIndex::new(atoms.iter().map(|a| a.2).collect())
        .map_err(|e| Error::InvalidPmf(format!("alias table: {e}")))?;
    let y_lo = joint.y_offset() * n as i64;
    let width = (joint.ny() - 1) * n + 1;

    let run_blocks = |first: usize, last: usize, total: usize| -> Vec<u64> {
        (first..last)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, n as u64, b as u64);
                let mut counts = vec![0u64; width];
                let todo = BLOCK.min(total - b * BLOCK);
                for _ in 0..todo {
                    let (mut s, mut t) = (0i64, 0i64);
                    for _ in 0..n {
                        let (x, y, _) = atoms[alias.sample(&mut rng)];
                        s += x;
                        t += y;
                    }
                    if s == m {
                        counts[(t - y_lo) as usize] += 1;
                    }
                }
                counts
            })
            .reduce(|| vec![0u64; width], |a, b| a.iter().zip(&b).map(|(p, q)| p + q).collect())
    };

    let mut proposals = reps;
    let mut counts = run_blocks(0, reps.div_ceil(BLOCK), reps);
    if counts.iter().all(|&c| c == 0) {
        proposals = reps * EXTENSION;
        counts = run_blocks(0, proposals.div_ceil(BLOCK), proposals);
    }
    let accepted: u64 = counts.iter().sum();
    if accepted == 0 {
        return Err(Error::NoAcceptance { proposals: proposals as u64, m });
    }
    Ok(McSample {
        law: LatticePmf::from_counts(y_lo, &counts)?,
        accepted: accepted as usize,
        proposals,
        accept_rate: accepted as f64 / proposals as f64,
    })
}

/// Half-width `√(ln(2/α) / (2n))` of the Dvoretzky–Kiefer–Wolfowitz band.
pub fn dkw_band(samples: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DkwCheck {
    /// `sup_x |F_emp(x) − F(x)|`.
    pub sup_diff: f64,
    pub band: f64,
    pub pass: bool,
}

/// Compares an empirical lattice cdf from `samples` draws against the exact one.
pub fn dkw_check(empirical: &LatticePmf<f64>, exact: &LatticePmf<f64>, samples: usize, alpha: f64) -> DkwCheck {
    let lo = empirical.min().min(exact.min());
    let hi = empirical.max().max(exact.max());
    let (mut fe, mut fx, mut sup) = (0.0f64, 0.0f64, 0.0f64);
    for x in lo..=hi {
        fe += empirical.prob(x);
        fx += exact.prob(x);
        sup = sup.max((fe - fx).abs());
    }
    let band = dkw_band(samples, alpha);
    DkwCheck { sup_diff: sup, band, pass: sup <= band }
}
