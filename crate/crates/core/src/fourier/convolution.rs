//! Exact `N`-fold self-convolution on the integer lattice by DFT exponentiation.
//!
//! Every transform is padded to the full reachable width `N·(width − 1) + 1`, so the
//! circular convolution computed by the DFT coincides with the linear one and the only
//! error left is floating-point roundoff.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{JointLatticePmf, LatticePmf};
use crate::scalar::{compensated_sum, Real};

/// Resource limits for the exact engine.
#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    /// Largest number of complex cells a full 2-D transform may allocate.
    pub max_cells: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_cells: 1 << 24 }
    }
}

/// Number of x-frequencies handled serially by one task of [`conditional_slice`].
const FREQ_CHUNK: usize = 32;

/// Row `S_N = m` of the law of `(S_N, T_N)`, normalized.
#[derive(Clone, Debug)]
pub struct ConditionalSlice<T> {
    /// Law of `T_N` given `S_N = m`.
    pub law: LatticePmf<T>,
    /// `P(S_N = m)` read off the same transform.
    pub prob_m: T,
    /// Absolute error budget carried by `prob_m` and by each cell before normalization.
    pub error_budget: T,
}

/// `N·defect + 4·N·eps·log2(L + 1)` for a transform with `cells` outputs.
pub fn error_budget<T: Real>(defect: T, n: usize, cells: usize) -> T {
    let nn = T::from_usize_lossy(n);
    let log = T::from_usize_lossy(cells + 1).log2();
    nn * defect + T::lit(4.0) * nn * T::epsilon() * log
}

fn full_width(n: usize, width: usize) -> usize {
    n * (width - 1) + 1
}

/// Maps an inverse-transform value to a probability.
///
/// Values within `32·eps` of zero are roundoff and become 0; values below
/// `-ROUNDOFF_CLAMP` cannot be explained by roundoff.
fn clamp_cell<T: Real>(v: T) -> Result<T> {
    if v < -T::ROUNDOFF_CLAMP {
        return Err(Error::NumericalFailure(format!("transform produced probability {v}")));
    }
    if v <= T::lit(32.0) * T::epsilon() {
        Ok(T::zero())
    } else {
        Ok(v)
    }
}

fn expi<T: Real>(num: usize, den: usize, sign: T) -> Complex<T> {
    let angle = sign * T::TAU() * T::from_usize_lossy(num) / T::from_usize_lossy(den);
    let (s, c) = angle.sin_cos();
    Complex::new(c, s)
}

/// Splits the output into weights and defect. A total above 1 by no more than the
/// roundoff part of the budget is rescaled to 1.
fn retained<T: Real>(mut weights: Vec<T>, n: usize, cells: usize) -> Result<(Vec<T>, T)> {
    let mass = compensated_sum(weights.iter().copied());
    let slack = T::MASS_TOL.max(error_budget(T::zero(), n, cells));
    if mass > T::one() + slack {
        return Err(Error::NumericalFailure(format!("convolution mass {mass} exceeds 1")));
    }
    if mass > T::one() {
        weights.iter_mut().for_each(|w| *w = *w / mass);
        return Ok((weights, T::zero()));
    }
    Ok((weights, T::one() - mass))
}

/// Law of `S_N = X_1 + ... + X_N`.
///
/// The returned defect is `1 − retained mass`: tail truncation of the input plus any
/// roundoff cells clamped to zero.
pub fn sum_law<T: Real>(pmf: &LatticePmf<T>, n: usize) -> Result<LatticePmf<T>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("N must be at least 1".into()));
    }
    if n == 1 {
        return Ok(pmf.clone());
    }
    let len = full_width(n, pmf.len());
    let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); len];
    for (slot, &w) in buf.iter_mut().zip(pmf.weights()) {
        slot.re = w;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = z.powu(n as u32);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = T::from_usize_lossy(len);
    let weights = buf.iter().map(|z| clamp_cell(z.re / scale)).collect::<Result<Vec<T>>>()?;
    let (weights, defect) = retained(weights, n, len)?;
    LatticePmf::new(pmf.offset() * n as i64, weights, defect)
}

/// `P(S_N = m)`; zero when `m` is not reachable.
pub fn prob_s_eq_m<T: Real>(pmf: &LatticePmf<T>, n: usize, m: i64) -> Result<T> {
    let law = sum_law(pmf, n)?;
    Ok(law.prob(m))
}

/// Exact law of `(S_N, T_N)` by a padded 2-D transform.
pub fn joint_law_sn_tn<T: Real>(
    joint: &JointLatticePmf<T>,
    n: usize,
    config: &EngineConfig,
) -> Result<JointLatticePmf<T>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("N must be at least 1".into()));
    }
    if n == 1 {
        return Ok(joint.clone());
    }
    let lx = full_width(n, joint.nx());
    let ly = full_width(n, joint.ny());
    let cells = lx.saturating_mul(ly);
    if cells > config.max_cells {
        return Err(Error::ResourceBudget { required: cells, budget: config.max_cells, shape: format!("{lx}x{ly}") });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut grid = vec![zero; cells];
    for ix in 0..joint.nx() {
        let row = &joint.weights()[ix * joint.ny()..(ix + 1) * joint.ny()];
        for (iy, &w) in row.iter().enumerate() {
            grid[ix * ly + iy].re = w;
        }
    }
    let mut planner = FftPlanner::new();
    let (fy, iy) = (planner.plan_fft_forward(ly), planner.plan_fft_inverse(ly));
    let (fx, ix) = (planner.plan_fft_forward(lx), planner.plan_fft_inverse(lx));

    rows_fft(&mut grid, ly, &fy);
    let mut cols = transpose(&grid, lx, ly);
    rows_fft(&mut cols, lx, &fx);
    cols.par_iter_mut().for_each(|z| *z = z.powu(n as u32));
    rows_fft(&mut cols, lx, &ix);
    let mut grid = transpose(&cols, ly, lx);
    rows_fft(&mut grid, ly, &iy);

    let scale = T::from_usize_lossy(cells);
    let weights = grid.iter().map(|z| clamp_cell(z.re / scale)).collect::<Result<Vec<T>>>()?;
    let (weights, defect) = retained(weights, n, cells)?;
    JointLatticePmf::new(joint.x_offset() * n as i64, joint.y_offset() * n as i64, lx, ly, weights, defect)
}

fn rows_fft<T: Real>(data: &mut [Complex<T>], width: usize, plan: &Arc<dyn Fft<T>>) {
    data.par_chunks_mut(width).for_each(|row| plan.process(row));
}

fn transpose<T: Copy + Send + Sync>(data: &[T], rows: usize, cols: usize) -> Vec<T> {
    (0..cols).into_par_iter().flat_map_iter(|c| (0..rows).map(move |r| data[r * cols + c])).collect()
}

/// Law of `T_N` given `S_N = m`, without materializing the full 2-D law.
///
/// For each x-frequency `k` the y-transform of `φ̂(k, ·)^N` is computed and rotated to
/// row `m`; conjugate-symmetric frequencies are folded so only `k ≤ Lx/2` is visited.
/// Chunks of frequencies run in parallel and are summed in chunk order.
pub fn conditional_slice<T: Real>(joint: &JointLatticePmf<T>, n: usize, m: i64) -> Result<ConditionalSlice<T>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("N must be at least 1".into()));
    }
    let lx = full_width(n, joint.nx());
    let ly = full_width(n, joint.ny());
    let budget = error_budget(joint.defect(), n, lx * ly);
    let target = m - joint.x_offset() * n as i64;
    if target < 0 || target >= lx as i64 {
        return Err(Error::IllConditioned { m, prob: 0.0, budget: budget.as_f64() });
    }
    let target = target as usize;
    let (nx, ny) = (joint.nx(), joint.ny());
    let weights = joint.weights();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(ly);
    let inverse = planner.plan_fft_inverse(ly);

    let half = lx / 2;
    let starts: Vec<usize> = (0..=half).step_by(FREQ_CHUNK).collect();
    let zero = Complex::new(T::zero(), T::zero());
    let partials: Vec<Vec<Complex<T>>> = starts
        .par_iter()
        .map(|&k0| {
            let mut acc = vec![zero; ly];
            let mut buf = vec![zero; ly];
            let mut scratch = vec![zero; forward.get_inplace_scratch_len()];
            for k in k0..(k0 + FREQ_CHUNK).min(half + 1) {
                buf.iter_mut().for_each(|z| *z = zero);
                for ix in 0..nx {
                    let tw = expi((k * ix) % lx, lx, -T::one());
                    for iy in 0..ny {
                        buf[iy] = buf[iy] + tw * weights[ix * ny + iy];
                    }
                }
                forward.process_with_scratch(&mut buf, &mut scratch);
                let paired = k != 0 && 2 * k != lx;
                let factor = if paired { T::lit(2.0) } else { T::one() };
                let rot = expi((k * target) % lx, lx, T::one()) * factor;
                for (a, z) in acc.iter_mut().zip(&buf) {
                    *a = *a + z.powu(n as u32) * rot;
                }
            }
            acc
        })
        .collect();
    let mut row = vec![zero; ly];
    for part in &partials {
        for (r, p) in row.iter_mut().zip(part) {
            *r = *r + *p;
        }
    }
    inverse.process(&mut row);
    let scale = T::from_usize_lossy(lx) * T::from_usize_lossy(ly);
    let cells = row.iter().map(|z| clamp_cell(z.re / scale)).collect::<Result<Vec<T>>>()?;
    let prob_m = compensated_sum(cells.iter().copied());
    if !(prob_m > T::lit(10.0) * budget) {
        return Err(Error::IllConditioned { m, prob: prob_m.as_f64(), budget: budget.as_f64() });
    }
    let law = LatticePmf::from_unnormalized(joint.y_offset() * n as i64, cells)?;
    Ok(ConditionalSlice { law, prob_m, error_budget: budget })
}
