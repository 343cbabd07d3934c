//! Total displacement of linear probing on a circular table.

use rand::Rng;
use rayon::prelude::*;

use super::families::borel_pmf;
use super::ModelJoint;
use crate::error::{Error, Result};
use crate::lattice::{JointLatticePmf, LatticePmf, TailTolerance};
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Largest `l` for which `d_{l,l−1}` is enumerated exhaustively.
pub const MAX_EXACT_L: usize = 8;
/// Largest number of hash sequences [`displacement_table_enumerate`] will visit.
pub const MAX_SEQUENCES: u64 = 50_000_000;
/// Fewest Monte Carlo draws accepted per simulated row.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Places a ball hashed to `h`, returning how far it moved.
#[inline]
fn probe(occupied: &mut [bool], h: usize) -> i64 {
    place(occupied, h).0
}

/// Places a ball hashed to `h`; returns the move length and the final slot.
#[inline]
fn place(occupied: &mut [bool], h: usize) -> (i64, usize) {
    let m = occupied.len();
    let mut pos = h;
    let mut moved = 0;
    while occupied[pos] {
        pos += 1;
        if pos == m {
            pos = 0;
        }
        moved += 1;
    }
    occupied[pos] = true;
    (moved, pos)
}

fn walk(occupied: &mut [bool], left: usize, total: i64, counts: &mut [u64]) {
    if left == 0 {
        counts[total as usize] += 1;
        return;
    }
    for h in 0..occupied.len() {
        let (d, pos) = place(occupied, h);
        walk(occupied, left - 1, total + d, counts);
        occupied[pos] = false;
    }
}

/// Exact law of `d_{m,n}` over all `m^n` equally likely hash sequences.
pub fn displacement_table_enumerate(m: usize, n: usize) -> Result<LatticePmf<f64>> {
    if n >= m.max(1) && n > 0 {
        return Err(Error::ParameterOutOfRange(format!("need n < m, got m = {m}, n = {n}")));
    }
    let sequences = (m as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if sequences > MAX_SEQUENCES {
        return Err(Error::ResourceBudget {
            required: sequences as usize,
            budget: MAX_SEQUENCES as usize,
            shape: format!("{m}^{n} hash sequences"),
        });
    }
    if n == 0 {
        return Ok(LatticePmf::point_mass(0));
    }
    let width = n * (n - 1) / 2 + 1;
    let counts = (0..m)
        .into_par_iter()
        .map(|h| {
            let mut occupied = vec![false; m];
            let d = probe(&mut occupied, h);
            let mut counts = vec![0u64; width];
            walk(&mut occupied, n - 1, d, &mut counts);
            counts
        })
        .reduce(|| vec![0u64; width], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    LatticePmf::from_counts(0, &counts)
}

/// Law of `d_{l,l−1}`, `1 ≤ l ≤ 8`.
pub fn displacement_enumerate(l: usize) -> Result<LatticePmf<f64>> {
    if !(1..=MAX_EXACT_L).contains(&l) {
        return Err(Error::ParameterOutOfRange(format!("l = {l} outside [1, {MAX_EXACT_L}]")));
    }
    displacement_table_enumerate(l, l - 1)
}

/// One draw of `d_{m,n}`.
pub fn hashing_simulate<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<i64> {
    if n >= m {
        return Err(Error::ParameterOutOfRange(format!("need n < m, got m = {m}, n = {n}")));
    }
    let mut occupied = vec![false; m];
    Ok((0..n).map(|_| probe(&mut occupied, rng.gen_range(0..m))).sum())
}

/// Histogram of `samples` draws of `d_{l,l−1}` on the stream `(seed, l, 0)`.
pub fn displacement_histogram(l: usize, samples: usize, seed: u64) -> Result<Vec<u64>> {
    let mut rng = stream_rng(seed, l as u64, 0);
    let mut counts = vec![0u64; l * l.saturating_sub(1) / 2 + 1];
    for _ in 0..samples {
        counts[hashing_simulate(l, l - 1, &mut rng)? as usize] += 1;
    }
    Ok(counts)
}

/// `X ~ Borel(μ)` with `Y | X = l ~ d_{l,l−1}`.
///
/// Rows `l ≤ lmax` are exact. With `mc_samples = 0` the law is conditioned on
/// `X ≤ lmax`; otherwise every further row up to the truncation point is a Monte Carlo
/// histogram and the result is flagged approximate.
pub fn hashing_joint<T: Real>(
    mu: f64,
    lmax: usize,
    mc_samples: usize,
    seed: u64,
    tol: TailTolerance,
) -> Result<ModelJoint<T>> {
    if !(1..=MAX_EXACT_L).contains(&lmax) {
        return Err(Error::ParameterOutOfRange(format!("lmax = {lmax} outside [1, {MAX_EXACT_L}]")));
    }
    if mc_samples != 0 && mc_samples < MIN_MC_SAMPLES {
        return Err(Error::ParameterOutOfRange(format!(
            "{mc_samples} Monte Carlo samples per row; at least {MIN_MC_SAMPLES} are required"
        )));
    }
    let px = borel_pmf::<f64>(mu, tol)?;
    let exact_rows: Vec<(i64, LatticePmf<f64>)> =
        (1..=lmax.min(px.max() as usize)).map(|l| Ok((l as i64, displacement_enumerate(l)?))).collect::<Result<_>>()?;
    let mut atoms = Vec::new();
    for (l, row) in &exact_rows {
        for (d, w) in row.iter() {
            atoms.push((*l, d, px.prob(*l) * w));
        }
    }
    if mc_samples == 0 {
        let kept: f64 = atoms.iter().map(|a| a.2).sum();
        let atoms: Vec<_> = atoms.into_iter().map(|(x, y, w)| (x, y, T::lit(w / kept))).collect();
        let joint = JointLatticePmf::from_atoms(&atoms, T::zero())?;
        return Ok(ModelJoint { joint, approximate: false, std_error: 0.0 });
    }
    let mc_rows: Vec<(i64, Vec<u64>)> = ((lmax + 1) as i64..=px.max())
        .into_par_iter()
        .map(|l| Ok((l, displacement_histogram(l as usize, mc_samples, seed)?)))
        .collect::<Result<_>>()?;
    let mut std_error = 0.0f64;
    let total = mc_samples as f64;
    for (l, counts) in &mc_rows {
        let pl = px.prob(*l);
        for (d, &c) in counts.iter().enumerate() {
            let q = c as f64 / total;
            std_error = std_error.max(pl * (q * (1.0 - q) / total).sqrt());
            if c > 0 {
                atoms.push((*l, d as i64, pl * q));
            }
        }
    }
    let atoms: Vec<_> = atoms.into_iter().map(|(x, y, w)| (x, y, T::lit(w))).collect();
    let joint = JointLatticePmf::from_atoms(&atoms, T::lit(px.defect()))?;
    Ok(ModelJoint { joint, approximate: true, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_tables() {
        assert_eq!(displacement_enumerate(1).unwrap(), LatticePmf::point_mass(0));
        assert_eq!(displacement_enumerate(2).unwrap(), LatticePmf::point_mass(0));
        let d3 = displacement_enumerate(3).unwrap();
        assert_abs_diff_eq!(d3.prob(0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d3.prob(1), 1.0 / 3.0, epsilon = 1e-15);
        assert!(displacement_enumerate(9).is_err());
    }

    #[test]
    fn displacement_bounds() {
        for l in 1..=7 {
            let d = displacement_enumerate(l).unwrap();
            assert!(d.min() >= 0 && d.max() <= (l * l.saturating_sub(1) / 2) as i64);
        }
    }

    #[test]
    fn single_ball_never_moves() {
        let mut rng = stream_rng(1, 0, 0);
        for _ in 0..100 {
            assert_eq!(hashing_simulate(5, 1, &mut rng).unwrap(), 0);
        }
        assert!(hashing_simulate(3, 3, &mut rng).is_err());
    }

    #[test]
    fn exact_rows_joint() {
        let mj = hashing_joint::<f64>(0.5, 8, 0, 0, TailTolerance::DEFAULT).unwrap();
        assert!(!mj.approximate);
        let j = &mj.joint;
        let (p1, p3) = (j.marginal_x().prob(1), j.marginal_x().prob(3));
        assert_abs_diff_eq!(j.get(1, 0), p1, epsilon = 1e-16);
        assert_abs_diff_eq!(j.get(3, 0) / p3, 2.0 / 3.0, epsilon = 1e-14);
        assert!(hashing_joint::<f64>(0.5, 8, 100, 0, TailTolerance::DEFAULT).is_err());
    }

    #[test]
    fn monte_carlo_rows_joint() {
        let tol = TailTolerance::new(1e-6).unwrap();
        let mj = hashing_joint::<f64>(0.3, 6, 10_000, 9, tol).unwrap();
        assert!(mj.approximate && mj.std_error > 0.0);
        let px = borel_pmf::<f64>(0.3, tol).unwrap();
        let mx = mj.joint.marginal_x();
        for l in px.min()..=px.max() {
            assert_abs_diff_eq!(mx.prob(l), px.prob(l), epsilon = 1e-15);
        }
    }
}
