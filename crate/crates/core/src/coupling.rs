//! Quantile coupling of a Bernoulli(p) and a Poisson(p) variable on one
//! uniform, and the n-fold sum of independent coupled pairs.
//!
//! For a uniform `u`:
//!
//! ```text
//! (L, B) = (0, 0)  if u < 1 - p
//!          (0, 1)  if 1 - p <= u < r_0
//!          (k, 1)  if s_{k-1} <= u < s_k, k >= 1
//! ```
//!
//! Intervals are half-open so every `u` maps to exactly one outcome; the
//! boundary points carry no probability.

use serde::Serialize;

use crate::distributions::{poisson_table, PoissonPmfTable};
use crate::error::{check_n, check_open_unit, Error, Result};
use crate::numeric::{exp_neg_excess, stable_sum};

/// One coupled outcome together with the uniform that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingPair {
    /// Poisson outcome.
    pub l: u64,
    /// Bernoulli outcome, 0 or 1.
    pub b: u8,
    /// The driving uniform.
    pub u: f64,
}

fn check_table_rate(table: &PoissonPmfTable, p: f64) -> Result<()> {
    if table.rate() == p {
        Ok(())
    } else {
        Err(Error::MismatchedTable {
            table_rate: table.rate(),
            expected: p,
        })
    }
}

/// Maps a uniform `u` to the coupled pair `(L, B)`.
///
/// `table` must be the Poisson table for rate `p`. A uniform at or above the
/// last partial sum cannot be placed and yields [`Error::TableCoverage`].
pub fn couple_from_uniform(p: f64, u: f64, table: &PoissonPmfTable) -> Result<CouplingPair> {
    check_open_unit("p", p)?;
    check_open_unit("u", u)?;
    check_table_rate(table, p)?;
    let b = u8::from(u >= 1.0 - p);
    // First index whose partial sum exceeds u.
    let l = table.partial_sums().partition_point(|&s| s <= u);
    if l == table.partial_sums().len() {
        return Err(Error::TableCoverage {
            requested: u,
            required_tol: (1.0 - u) / 2.0,
        });
    }
    Ok(CouplingPair { l: l as u64, b, u })
}

/// Exact joint law of the coupled pair for one component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    pub p: f64,
    /// Mass of `(0, 0)`, equal to `1 - p`.
    pub atom_00: f64,
    /// Mass of `(0, 1)`, equal to `e^{-p} - (1 - p)`.
    pub atom_01: f64,
    /// Masses of `(k, 1)` for `k = 1..=K`.
    pub atoms_k1: Vec<f64>,
    pub truncation_index: u64,
    pub tail_mass: f64,
}

impl JointPmf {
    /// Mass of the outcome `(l, b)`; zero outside the support, and zero for
    /// `l` beyond the truncation index.
    pub fn mass(&self, l: u64, b: u8) -> f64 {
        match (l, b) {
            (0, 0) => self.atom_00,
            (0, 1) => self.atom_01,
            (k, 1) => self.atoms_k1.get(k as usize - 1).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// All atoms `((l, b), mass)` in the order of the uniform intervals.
    pub fn atoms(&self) -> impl Iterator<Item = ((u64, u8), f64)> + '_ {
        [((0, 0), self.atom_00), ((0, 1), self.atom_01)]
            .into_iter()
            .chain(
                self.atoms_k1
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| ((i as u64 + 1, 1), m)),
            )
    }

    /// `P(B = 1)`.
    pub fn marginal_b1(&self) -> f64 {
        stable_sum(std::iter::once(self.atom_01).chain(self.atoms_k1.iter().copied()))
    }

    /// `P(L = k)` for `k = 0..=K`.
    pub fn marginal_l(&self) -> Vec<f64> {
        std::iter::once(self.atom_00 + self.atom_01)
            .chain(self.atoms_k1.iter().copied())
            .collect()
    }

    /// `sum |l - b| * mass` over the tabulated atoms.
    pub fn expected_abs_difference(&self) -> f64 {
        stable_sum(
            self.atoms()
                .map(|((l, b), m)| (l as f64 - b as f64).abs() * m),
        )
    }
}

/// Joint pmf of the coupled pair, with the Poisson side truncated at `tol`.
pub fn joint_pmf(p: f64, tol: f64) -> Result<JointPmf> {
    check_open_unit("p", p)?;
    let table = poisson_table(p, tol)?;
    joint_pmf_from_table(p, &table)
}

/// Joint pmf built on a caller-supplied Poisson table for rate `p`.
pub fn joint_pmf_from_table(p: f64, table: &PoissonPmfTable) -> Result<JointPmf> {
    check_open_unit("p", p)?;
    check_table_rate(table, p)?;
    Ok(JointPmf {
        p,
        atom_00: 1.0 - p,
        atom_01: exp_neg_excess(p),
        atoms_k1: table.values()[1..].to_vec(),
        truncation_index: table.truncation_index(),
        tail_mass: table.tail_mass(),
    })
}

/// `E|L - B| = 2(e^{-p} - (1 - p))` for one coupled pair.
pub fn expected_discrepancy_single(p: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(2.0 * exp_neg_excess(p))
}

/// `P(L != B) = p(1 - e^{-p})` for one coupled pair.
pub fn mismatch_probability_single(p: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(-p * (-p).exp_m1())
}

/// Law of an integer-valued difference, stored as a dense window of masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffDistribution {
    /// Value carried by `masses[0]`.
    pub min_support: i64,
    pub masses: Vec<f64>,
    /// Mass not represented in `masses`.
    pub tail_mass: f64,
}

impl DiffDistribution {
    pub fn max_support(&self) -> i64 {
        self.min_support + self.masses.len() as i64 - 1
    }

    pub fn mass(&self, d: i64) -> f64 {
        let offset = d - self.min_support;
        if offset < 0 {
            return 0.0;
        }
        self.masses.get(offset as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.min_support + i as i64, m))
    }

    pub fn total_mass(&self) -> f64 {
        stable_sum(self.masses.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        stable_sum(self.iter().map(|(d, m)| d as f64 * m))
    }

    /// `sum |d| * mass(d)`.
    pub fn expected_abs(&self) -> f64 {
        stable_sum(self.iter().map(|(d, m)| d.unsigned_abs() as f64 * m))
    }

    /// `1 - mass(0)`, the probability that the difference is non-zero.
    pub fn nonzero_probability(&self) -> f64 {
        1.0 - self.mass(0)
    }
}

/// Law of `L - B` for one coupled pair.
pub fn single_diff_distribution(p: f64, tol: f64) -> Result<DiffDistribution> {
    let joint = joint_pmf(p, tol)?;
    Ok(diff_from_joint(&joint))
}

fn diff_from_joint(joint: &JointPmf) -> DiffDistribution {
    // (0,1) -> -1, (0,0) and (1,1) -> 0, (k,1) -> k - 1.
    let mut masses = Vec::with_capacity(joint.atoms_k1.len() + 1);
    masses.push(joint.atom_01);
    masses.push(joint.atom_00 + joint.atoms_k1.first().copied().unwrap_or(0.0));
    masses.extend(joint.atoms_k1.iter().skip(1).copied());
    DiffDistribution {
        min_support: -1,
        masses,
        tail_mass: joint.tail_mass,
    }
}

/// Default cap on the support length of the n-fold convolution.
pub fn default_support_cap(n: u64, p: f64) -> usize {
    let mean = n as f64 * p;
    (10.0 * (mean + 10.0 * mean.sqrt() + n as f64)).ceil() as usize
}

/// Convolution of two windows; both `a` and `b` are densely indexed.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drops leading and trailing masses whose combined weight stays within
/// `budget`; returns (entries dropped at the front, mass dropped).
fn trim(masses: &mut Vec<f64>, budget: f64) -> (usize, f64) {
    let half = budget / 2.0;
    let mut dropped = 0.0;

    let mut back = 0.0;
    while masses.len() > 1 {
        let last = masses[masses.len() - 1];
        if back + last > half {
            break;
        }
        back += last;
        masses.pop();
    }
    dropped += back;

    let mut front = 0.0;
    let mut cut = 0;
    while cut + 1 < masses.len() && front + masses[cut] <= half {
        front += masses[cut];
        cut += 1;
    }
    masses.drain(..cut);
    dropped += front;
    (cut, dropped)
}

/// Law of `sum_i (L_i - B_i)` over `n` independent coupled pairs.
///
/// Computed as a left fold of convolutions. The per-component table and each
/// convolution step are each given a `tol / (2n)` share of the truncation
/// budget, so the total unrepresented mass stays below `tol`. Trimming is
/// additionally scaled by the support reach so the dropped first moment
/// obeys the same budget.
pub fn nfold_diff_distribution(n: u64, p: f64, tol: f64) -> Result<DiffDistribution> {
    nfold_diff_distribution_with_cap(n, p, tol, default_support_cap(n, p))
}

/// [`nfold_diff_distribution`] with an explicit support cap.
pub fn nfold_diff_distribution_with_cap(
    n: u64,
    p: f64,
    tol: f64,
    support_cap: usize,
) -> Result<DiffDistribution> {
    check_n(n)?;
    check_open_unit("p", p)?;
    check_open_unit("tol", tol)?;
    let share = tol / (2 * n) as f64;
    // The tighter table keeps the dropped tail's first moment within the
    // share as well as its mass.
    let single = single_diff_distribution(p, share * 1e-3)?;
    if n == 1 {
        return Ok(single);
    }
    if single.masses.len() > support_cap {
        return Err(Error::SupportCap {
            len: single.masses.len(),
            cap: support_cap,
        });
    }
    let single_retained = 1.0 - single.tail_mass;

    let mut masses = single.masses.clone();
    let mut min_support = single.min_support;
    let mut retained = single_retained;
    for _ in 1..n {
        masses = convolve(&masses, &single.masses);
        min_support += single.min_support;
        retained *= single_retained;
        let reach = min_support.unsigned_abs().max(masses.len() as u64) as f64;
        let (front, dropped) = trim(&mut masses, share / (1.0 + reach));
        min_support += front as i64;
        retained -= dropped;
        if masses.len() > support_cap {
            return Err(Error::SupportCap {
                len: masses.len(),
                cap: support_cap,
            });
        }
    }
    Ok(DiffDistribution {
        min_support,
        masses,
        tail_mass: (1.0 - retained).max(0.0),
    })
}

/// Exact `E|L - B|` for the summed pair, from the convolution.
pub fn expected_discrepancy_sum(n: u64, p: f64, tol: f64) -> Result<f64> {
    Ok(nfold_diff_distribution(n, p, tol)?.expected_abs())
}

/// Applies [`couple_from_uniform`] to each uniform and returns
/// `(sum L_i, sum B_i)`.
pub fn sum_coupling_sample(
    n: u64,
    p: f64,
    uniforms: &[f64],
    table: &PoissonPmfTable,
) -> Result<(u64, u64)> {
    check_n(n)?;
    if uniforms.len() as u64 != n {
        return Err(Error::Config(format!(
            "expected {n} uniforms, got {}",
            uniforms.len()
        )));
    }
    uniforms.iter().try_fold((0u64, 0u64), |(l, b), &u| {
        let pair = couple_from_uniform(p, u, table)?;
        Ok((l + pair.l, b + u64::from(pair.b)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(p: f64) -> PoissonPmfTable {
        poisson_table(p, 1e-15).unwrap()
    }

    #[test]
    fn couple_places_uniforms() {
        let t = table(0.5);
        let pair = |u| {
            let c = couple_from_uniform(0.5, u, &t).unwrap();
            (c.l, c.b)
        };
        assert_eq!(pair(0.3), (0, 0));
        assert_eq!(pair(0.55), (0, 1));
        assert_eq!(pair(0.95), (2, 1));
        // Boundary goes to the upper interval.
        assert_eq!(pair(0.5), (0, 1));
        assert_eq!(pair(t.values()[0]), (1, 1));
    }

    #[test]
    fn couple_rejects_bad_inputs() {
        let t = table(0.5);
        assert!(couple_from_uniform(0.0, 0.5, &t).is_err());
        assert!(couple_from_uniform(0.5, 0.0, &t).is_err());
        assert!(couple_from_uniform(0.5, 1.0, &t).is_err());
        assert!(matches!(
            couple_from_uniform(0.4, 0.5, &t),
            Err(Error::MismatchedTable { .. })
        ));
        let coarse = poisson_table(0.5, 0.01).unwrap();
        let last = *coarse.partial_sums().last().unwrap();
        let u = (last + 1.0) / 2.0;
        match couple_from_uniform(0.5, u, &coarse) {
            Err(Error::TableCoverage { required_tol, .. }) => {
                let finer = poisson_table(0.5, required_tol).unwrap();
                assert!(couple_from_uniform(0.5, u, &finer).is_ok());
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn joint_atoms() {
        let j = joint_pmf(0.5, 1e-15).unwrap();
        assert_eq!(j.atom_00, 0.5);
        assert!((j.atom_01 - 0.106_530_659_7).abs() < 1e-10);
        assert!(((-0.5f64).exp() - 0.5 - j.atom_01).abs() < 1e-16);
        let tiny = joint_pmf(0.001, 1e-15).unwrap();
        let direct = (-0.001f64).exp() - (1.0 - 0.001);
        assert!(((tiny.atom_01 - 5e-7) / 5e-7).abs() < 0.2);
        assert!(((tiny.atom_01 - direct) / direct).abs() < 1e-9);
        assert!(joint_pmf(0.0, 1e-12).is_err());
        assert!(joint_pmf(1.0, 1e-12).is_err());
    }

    #[test]
    fn joint_matches_uniform_placement() {
        // Midpoint rule over a fine grid of uniforms.
        let p = 0.5;
        let t = table(p);
        let j = joint_pmf_from_table(p, &t).unwrap();
        let steps = 200_000;
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..steps {
            let u = (i as f64 + 0.5) / steps as f64;
            let c = couple_from_uniform(p, u, &t).unwrap();
            *counts.entry((c.l, c.b)).or_insert(0u64) += 1;
        }
        for ((l, b), count) in counts {
            let freq = count as f64 / steps as f64;
            assert!(
                (freq - j.mass(l, b)).abs() <= 2.0 / steps as f64,
                "({l},{b})"
            );
        }
    }

    #[test]
    fn discrepancy_closed_forms() {
        let small = expected_discrepancy_single(1e-9).unwrap();
        assert!(small < 1e-17);
        let d = expected_discrepancy_single(0.1).unwrap();
        assert!((d - 0.009_674_836_0).abs() < 1e-10);
        assert!(d <= 0.01);
        let from_joint = joint_pmf(0.1, 1e-15).unwrap().expected_abs_difference();
        assert!((d - from_joint).abs() < 1e-15);

        let m = mismatch_probability_single(0.5).unwrap();
        assert!((m - 0.196_734_670_1).abs() < 1e-10);
        let j = joint_pmf(0.5, 1e-15).unwrap();
        let oracle = j.atom_01 + j.atoms_k1[1..].iter().sum::<f64>();
        assert!((m - oracle).abs() < 1e-12);
        assert!(mismatch_probability_single(1e-12).unwrap() < 1e-23);
    }

    #[test]
    fn single_diff_masses() {
        let d = single_diff_distribution(0.5, 1e-15).unwrap();
        assert!((d.mass(0) - (0.5 + 0.5 * (-0.5f64).exp())).abs() < 1e-15);
        assert!((d.mass(0) - 0.803_265_329_9).abs() < 1e-10);
        assert!((d.mass(-1) - ((-0.5f64).exp() - 0.5)).abs() < 1e-16);
        assert!(d.mean().abs() < 1e-13);
        let m = mismatch_probability_single(0.5).unwrap();
        assert!((d.nonzero_probability() - m).abs() < 1e-12);
    }

    #[test]
    fn nfold_examples() {
        let one = nfold_diff_distribution(1, 0.3, 1e-12).unwrap();
        assert_eq!(
            one,
            single_diff_distribution(0.3, 1e-12 / 2.0 * 1e-3).unwrap()
        );
        let two = nfold_diff_distribution(2, 0.5, 1e-12).unwrap();
        let atom = (-0.5f64).exp() - 0.5;
        assert!((two.mass(-2) - atom * atom).abs() < 1e-15);
        // Independently evaluated at 30 digits.
        assert!((two.mass(-2) - 0.011_348_781_458_8).abs() < 1e-12);
        assert_eq!(two.min_support, -2);
        for &(n, p) in &[(10u64, 0.1), (50, 0.3), (100, 0.05)] {
            let d = nfold_diff_distribution(n, p, 1e-12).unwrap();
            assert!(d.mean().abs() < 1e-9);
            assert!(d.tail_mass <= 1e-12);
            assert!((d.total_mass() - (1.0 - d.tail_mass)).abs() < 1e-10);
        }
    }

    #[test]
    fn nfold_support_cap_is_enforced() {
        assert!(matches!(
            nfold_diff_distribution_with_cap(20, 0.3, 1e-12, 8),
            Err(Error::SupportCap { cap: 8, .. })
        ));
        assert!(nfold_diff_distribution(0, 0.3, 1e-12).is_err());
    }

    #[test]
    fn sum_discrepancy_chain() {
        let single = expected_discrepancy_single(0.1).unwrap();
        let one = expected_discrepancy_sum(1, 0.1, 1e-12).unwrap();
        assert!((one - single).abs() < 1e-12);
        let ten = expected_discrepancy_sum(10, 0.1, 1e-12).unwrap();
        assert!(ten <= 10.0 * single + 1e-12);
        assert!(ten <= 0.1);
    }

    #[test]
    fn sum_sample_examples() {
        let t = table(0.5);
        assert_eq!(
            sum_coupling_sample(3, 0.5, &[0.1, 0.2, 0.3], &t).unwrap(),
            (0, 0)
        );
        assert_eq!(
            sum_coupling_sample(2, 0.5, &[0.55, 0.95], &t).unwrap(),
            (2, 2)
        );
        let single = couple_from_uniform(0.5, 0.95, &t).unwrap();
        assert_eq!(
            sum_coupling_sample(1, 0.5, &[0.95], &t).unwrap(),
            (single.l, u64::from(single.b))
        );
        assert!(sum_coupling_sample(2, 0.5, &[0.5], &t).is_err());
    }

    proptest! {
        #[test]
        fn coupling_is_monotone(p in 0.001f64..0.999, u1 in 1e-9f64..0.999_999, u2 in 1e-9f64..0.999_999) {
            let t = table(p);
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let a = couple_from_uniform(p, lo, &t).unwrap();
            let b = couple_from_uniform(p, hi, &t).unwrap();
            prop_assert!(a.l <= b.l && a.b <= b.b);
            prop_assert!(a.b == 1 || a.l == 0);
        }

        #[test]
        fn discrepancy_within_p_squared(p in 1e-6f64..0.999_999) {
            prop_assert!(expected_discrepancy_single(p).unwrap() <= p * p);
            prop_assert!(mismatch_probability_single(p).unwrap() <= p * p);
        }
    }
}
