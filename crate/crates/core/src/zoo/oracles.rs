//! Brute-force laws used to validate the Fourier engine.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Largest number of weak compositions [`bose_einstein_oracle`] will visit.
pub const MAX_COMPOSITIONS: u128 = 10_000_000;
/// Largest `N` accepted by [`branching_oracle`].
pub const MAX_BRANCHING_N: usize = 8;

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Law of the number of empty urns after `m` balls are thrown uniformly into `n` urns.
///
/// Counts `C(n, u)·Surj(m, n − u)` exactly in integers while every term fits in 128 bits;
/// otherwise propagates the occupied-urn count ball by ball.
pub fn occupancy_oracle(m: usize, n: usize) -> Result<LatticePmf<f64>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("need at least one urn".into()));
    }
    if n <= 20 && (m as f64) * (n as f64).log2() < 100.0 {
        Ok(occupancy_by_surjections(m, n))
    } else {
        occupancy_by_recursion(m, n)
    }
}

fn occupancy_by_surjections(m: usize, n: usize) -> LatticePmf<f64> {
    let total = (n as u128).pow(m as u32);
    let surj = |k: usize| -> u128 {
        // inclusion-exclusion; each term is below 2^20 · n^m < 2^120
        let mut s: i128 = 0;
        for j in 0..=k {
            let term = binomial(k as u64, j as u64) as i128 * ((k - j) as i128).pow(m as u32);
            s += if j % 2 == 0 { term } else { -term };
        }
        s as u128
    };
    let counts: Vec<u128> = (0..=n).map(|u| binomial(n as u64, u as u64) * surj(n - u)).collect();
    let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
    LatticePmf::from_unnormalized(0, weights).expect("some placement exists")
}

fn occupancy_by_recursion(m: usize, n: usize) -> Result<LatticePmf<f64>> {
    let nf = n as f64;
    let mut occupied = vec![0.0f64; n + 1];
    occupied[0] = 1.0;
    for _ in 0..m {
        let mut next = vec![0.0f64; n + 1];
        for (k, &p) in occupied.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[k] += p * k as f64 / nf;
            if k < n {
                next[k + 1] += p * (n - k) as f64 / nf;
            }
        }
        occupied = next;
    }
    LatticePmf::from_unnormalized(0, occupied.into_iter().rev().collect())
}

/// Law of `Σ f(Z_i)` when `(Z_1, ..., Z_N)` is uniform over weak compositions of `m`.
pub fn bose_einstein_oracle(m: usize, n: usize, f: &dyn Fn(i64) -> i64) -> Result<LatticePmf<f64>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("need at least one urn".into()));
    }
    let count = binomial((m + n - 1) as u64, m as u64);
    if count > MAX_COMPOSITIONS {
        return Err(Error::ResourceBudget {
            required: count as usize,
            budget: MAX_COMPOSITIONS as usize,
            shape: format!("compositions of {m} into {n} parts"),
        });
    }
    let mut hist = BTreeMap::new();
    compositions(m as i64, n, 0, f, &mut hist);
    histogram_pmf(&hist)
}

fn compositions(left: i64, parts: usize, acc: i64, f: &dyn Fn(i64) -> i64, hist: &mut BTreeMap<i64, u64>) {
    if parts == 1 {
        *hist.entry(acc + f(left)).or_insert(0) += 1;
        return;
    }
    for z in 0..=left {
        compositions(left - z, parts - 1, acc + f(z), f, hist);
    }
}

fn histogram_pmf(hist: &BTreeMap<i64, u64>) -> Result<LatticePmf<f64>> {
    let lo = *hist.keys().next().ok_or_else(|| Error::InvalidPmf("empty histogram".into()))?;
    let hi = *hist.keys().next_back().expect("non-empty");
    let counts: Vec<u64> = (lo..=hi).map(|v| hist.get(&v).copied().unwrap_or(0)).collect();
    LatticePmf::from_counts(lo, &counts)
}

/// Comparison of ballot conditioning against plain conditioning on `S_N = N − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingReport {
    /// Total variation between the two laws of the sorted offspring multiset.
    pub gap: f64,
    /// `P(S_N = N − 1)`.
    pub plain_mass: f64,
    /// `P(S_k ≥ k for k < N, S_N = N − 1)`.
    pub ballot_mass: f64,
    pub plain_sequences: u64,
    pub ballot_sequences: u64,
}

struct Tally {
    plain: BTreeMap<Vec<i64>, f64>,
    ballot: BTreeMap<Vec<i64>, f64>,
    plain_sequences: u64,
    ballot_sequences: u64,
}

/// Enumerates every offspring sequence `(x_1, ..., x_N)` with `S_N = N − 1`.
pub fn branching_oracle(offspring: &LatticePmf<f64>, n: usize) -> Result<BranchingReport> {
    if !(1..=MAX_BRANCHING_N).contains(&n) {
        return Err(Error::ParameterOutOfRange(format!("N = {n} outside [1, {MAX_BRANCHING_N}]")));
    }
    if offspring.min() < 0 {
        return Err(Error::InvalidPmf("offspring counts must be non-negative".into()));
    }
    let mut tally = Tally { plain: BTreeMap::new(), ballot: BTreeMap::new(), plain_sequences: 0, ballot_sequences: 0 };
    let mut seq = Vec::with_capacity(n);
    extend(offspring, n, &mut seq, 0, 1.0, true, &mut tally);
    let plain_mass: f64 = tally.plain.values().sum();
    let ballot_mass: f64 = tally.ballot.values().sum();
    if plain_mass == 0.0 || ballot_mass == 0.0 {
        return Err(Error::IllConditioned { m: n as i64 - 1, prob: plain_mass, budget: 0.0 });
    }
    let keys: std::collections::BTreeSet<&Vec<i64>> = tally.plain.keys().chain(tally.ballot.keys()).collect();
    let gap = 0.5
        * keys
            .into_iter()
            .map(|k| {
                let a = tally.plain.get(k).copied().unwrap_or(0.0) / plain_mass;
                let b = tally.ballot.get(k).copied().unwrap_or(0.0) / ballot_mass;
                (a - b).abs()
            })
            .sum::<f64>();
    Ok(BranchingReport {
        gap,
        plain_mass,
        ballot_mass,
        plain_sequences: tally.plain_sequences,
        ballot_sequences: tally.ballot_sequences,
    })
}

fn extend(
    offspring: &LatticePmf<f64>,
    n: usize,
    seq: &mut Vec<i64>,
    sum: i64,
    weight: f64,
    ballot: bool,
    tally: &mut Tally,
) {
    let target = n as i64 - 1;
    if seq.len() == n {
        if sum != target {
            return;
        }
        let mut key = seq.clone();
        key.sort_unstable();
        tally.plain_sequences += 1;
        *tally.plain.entry(key.clone()).or_insert(0.0) += weight;
        if ballot {
            tally.ballot_sequences += 1;
            *tally.ballot.entry(key).or_insert(0.0) += weight;
        }
        return;
    }
    for (x, p) in offspring.iter() {
        if p == 0.0 || sum + x > target {
            continue;
        }
        seq.push(x);
        let k = seq.len() as i64;
        let still = ballot && (k == n as i64 || sum + x >= k);
        extend(offspring, n, seq, sum + x, weight * p, still, tally);
        seq.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn occupancy_small_cases() {
        let two = occupancy_oracle(2, 2).unwrap();
        assert_abs_diff_eq!(two.prob(0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(two.prob(1), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(occupancy_oracle(3, 3).unwrap().prob(0), 6.0 / 27.0, epsilon = 1e-16);
        let sparse = occupancy_oracle(2, 5).unwrap();
        assert_eq!(sparse.min(), 3);
    }

    #[test]
    fn occupancy_routes_agree() {
        for (m, n) in [(8, 8), (5, 3), (12, 9), (1, 4)] {
            let a = occupancy_by_surjections(m, n);
            let b = occupancy_by_recursion(m, n).unwrap();
            assert!(a.total_variation(&b) < 1e-14, "m={m} n={n}");
        }
        let big = occupancy_oracle(300, 200).unwrap();
        assert_abs_diff_eq!(big.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bose_cases() {
        let first = bose_einstein_oracle(3, 2, &|z| z).unwrap();
        assert_eq!(first, LatticePmf::point_mass(3));
        let zero = bose_einstein_oracle(4, 3, &|_| 0).unwrap();
        assert_eq!(zero, LatticePmf::point_mass(0));
        // with two urns the count of empty urns is 1 for (0,3),(3,0) and 0 otherwise
        let empty = bose_einstein_oracle(3, 2, &|z| (z == 0) as i64).unwrap();
        assert_abs_diff_eq!(empty.prob(1), 0.5, epsilon = 1e-16);
    }

    #[test]
    fn branching_hand_case() {
        let uni = LatticePmf::new(0, vec![0.5, 0.0, 0.5], 0.0).unwrap();
        let r = branching_oracle(&uni, 3).unwrap();
        assert_eq!(r.plain_sequences, 3);
        assert_eq!(r.ballot_sequences, 1);
        assert!(r.gap < 1e-15);
        let one = branching_oracle(&uni, 1).unwrap();
        assert_eq!(one.plain_sequences, 1);
        assert_eq!(one.gap, 0.0);
    }
}
