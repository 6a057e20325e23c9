//! The invariant grid behind `verify`: every exact identity and inequality
//! checked on fixed parameter grids.
//!
//! Poisson tables are obtained through [`Verifier`], which can corrupt them
//! on purpose so the suite can be shown to fail.

use rayon::prelude::*;
use serde::Serialize;

use crate::approximation::{
    assemble_report, set_gap_from_tables, tv_distance_from_tables, worst_case_set_from_tables,
    SetSpec,
};
use crate::coupling::{
    expected_discrepancy_single, joint_pmf_from_table, mismatch_probability_single,
    nfold_diff_distribution, single_diff_distribution, DiffDistribution,
};
use crate::distributions::{
    binomial_table, poisson_table_covering, BinomialPmfTable, PoissonPmfTable,
};
use crate::error::{Error, Result};
use crate::numeric::{stable_sum, CompensatedSum};

/// Below this, tolerances are not resolvable in double precision.
pub const MIN_TOLERANCE: f64 = 1e-15;

/// Above this, truncation error would swamp the quantities being compared.
pub const MAX_TOLERANCE: f64 = 1e-6;

pub const N_GRID: [u64; 6] = [1, 2, 5, 10, 50, 100];
pub const P_GRID: [f64; 5] = [0.001, 0.01, 0.05, 0.1, 0.3];

/// Tolerance for the single-component tables behind the 1e-12 identities.
const SINGLE_TABLE_TOL: f64 = 1e-16;

/// `0.01, 0.02, ..., 0.99`.
pub fn fine_p_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Rejects tolerances the checks cannot honour.
pub fn check_tolerance(tol: f64) -> Result<()> {
    if (MIN_TOLERANCE..=MAX_TOLERANCE).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "[1e-15, 1e-6] (tolerance infeasible in double precision)",
        })
    }
}

/// Deliberate corruption applied to every Poisson table the suite builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Inflates `r_1` by 0.1% and recomputes the partial sums.
    CorruptPoissonTable,
}

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// First failing case, e.g. `n=5 p=0.1: ...`.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Verifier {
    tol: f64,
    fault: Option<Fault>,
}

type CheckFn = fn(&Verifier) -> Result<Option<String>>;

impl Verifier {
    pub fn new(tol: f64) -> Result<Self> {
        check_tolerance(tol)?;
        Ok(Self { tol, fault: None })
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Builds a Poisson table, applying the configured fault.
    pub fn poisson(&self, rate: f64, tol: f64, min_index: u64) -> Result<PoissonPmfTable> {
        let mut table = poisson_table_covering(rate, tol, min_index)?;
        if let Some(Fault::CorruptPoissonTable) = self.fault {
            if table.values.len() > 1 {
                table.values[1] *= 1.001;
            }
            let mut acc = CompensatedSum::new();
            for (s, &v) in table.partial_sums.iter_mut().zip(&table.values) {
                acc.add(v);
                *s = acc.value();
            }
            table.tail_mass = (1.0 - acc.value()).max(0.0);
        }
        Ok(table)
    }

    fn tables(
        &self,
        n: u64,
        p: f64,
        min_index: u64,
    ) -> Result<(BinomialPmfTable, PoissonPmfTable)> {
        Ok((
            binomial_table(n, p)?,
            self.poisson(n as f64 * p, self.tol, n.max(min_index))?,
        ))
    }

    pub fn checks() -> Vec<(&'static str, CheckFn)> {
        vec![
            (
                "poisson_table invariants on rate grid",
                check_poisson_tables,
            ),
            (
                "poisson recurrence matches log-factorial evaluation",
                check_poisson_log_factorial,
            ),
            (
                "binomial_table normalized and unimodal",
                check_binomial_tables,
            ),
            (
                "closed-form discrepancy matches joint pmf on grid",
                check_closed_form,
            ),
            (
                "expected_discrepancy_single <= p^2 on grid",
                check_single_bound,
            ),
            (
                "joint pmf marginals are Bernoulli(p) and Poisson(p)",
                check_joint_marginals,
            ),
            (
                "mismatch identity 1 - mass(0) = p(1 - e^-p)",
                check_mismatch_identity,
            ),
            (
                "tv_distance(n=1) equals mismatch_probability_single",
                check_tv_single,
            ),
            (
                "bound chain tv <= mismatch <= E|L-B| <= np^2 on grid",
                check_chain,
            ),
            (
                "worst_case_set gap equals tv_distance on grid",
                check_worst_case,
            ),
            (
                "exhaustive subset supremum for n <= 3",
                check_exhaustive_supremum,
            ),
            (
                "nfold convolution matches product enumeration",
                check_convolution,
            ),
            (
                "set_gap symmetric under complement",
                check_complement_symmetry,
            ),
        ]
    }

    /// Runs every check; outcomes come back in declaration order.
    pub fn run(&self) -> Vec<CheckOutcome> {
        Self::checks()
            .into_par_iter()
            .map(|(name, check)| {
                let failure = match check(self) {
                    Ok(failure) => failure,
                    Err(e) => Some(format!("error: {e}")),
                };
                CheckOutcome {
                    name,
                    passed: failure.is_none(),
                    failure,
                }
            })
            .collect()
    }
}

/// Returns the first failure over a grid of cases.
fn first_failure<T: Sync>(
    cases: &[T],
    check: impl Fn(&T) -> Result<Option<String>> + Sync + Send,
) -> Result<Option<String>> {
    let results: Vec<Result<Option<String>>> = cases.par_iter().map(check).collect();
    for r in results {
        if let Some(msg) = r? {
            return Ok(Some(msg));
        }
    }
    Ok(None)
}

fn fail(cond: bool, msg: impl FnOnce() -> String) -> Option<String> {
    if cond {
        None
    } else {
        Some(msg())
    }
}

fn ln_factorial(k: u64) -> f64 {
    stable_sum((2..=k).map(|i| (i as f64).ln()))
}

fn poisson_direct(rate: f64, k: u64) -> f64 {
    (-rate + k as f64 * rate.ln() - ln_factorial(k)).exp()
}

const RATE_GRID: [f64; 10] = [0.001, 0.01, 0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 30.0];

fn check_poisson_tables(v: &Verifier) -> Result<Option<String>> {
    first_failure(&RATE_GRID, |&rate| {
        let t = v.poisson(rate, v.tol, 0)?;
        let vals = t.values();
        if let Some(k) = vals.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Ok(Some(format!("rate={rate}: r_{k} outside [0,1]")));
        }
        if t.partial_sums().windows(2).any(|w| w[0] > w[1]) {
            return Ok(Some(format!("rate={rate}: partial sums decrease")));
        }
        let total = stable_sum(vals.iter().copied());
        if (total - 1.0).abs() > v.tol || t.tail_mass() > v.tol {
            return Ok(Some(format!(
                "rate={rate}: total mass {total:e} not within tol of 1"
            )));
        }
        for k in 0..vals.len() - 1 {
            let lhs = vals[k + 1] * (k + 1) as f64;
            let rhs = vals[k] * rate;
            if rhs > 1e-290 && ((lhs - rhs) / rhs).abs() > 1e-12 {
                return Ok(Some(format!("rate={rate}: recurrence broken at k={k}")));
            }
        }
        Ok(None)
    })
}

fn check_poisson_log_factorial(v: &Verifier) -> Result<Option<String>> {
    let rates: Vec<f64> = vec![0.05, 0.3, 1.0, 3.3, 7.5, 12.0, 20.0];
    first_failure(&rates, |&rate| {
        let t = v.poisson(rate, v.tol, 40)?;
        for k in 0..=40u64 {
            let direct = poisson_direct(rate, k);
            let got = t.values()[k as usize];
            if ((got - direct) / direct).abs() > 1e-10 {
                return Ok(Some(format!("rate={rate} k={k}: {got:e} vs {direct:e}")));
            }
        }
        Ok(None)
    })
}

fn check_binomial_tables(_: &Verifier) -> Result<Option<String>> {
    let cases: Vec<(u64, f64)> = [1u64, 2, 5, 10, 50, 100, 1000]
        .iter()
        .flat_map(|&n| [0.001, 0.1, 0.3, 0.5, 0.9].map(|p| (n, p)))
        .collect();
    first_failure(&cases, |&(n, p)| {
        let t = binomial_table(n, p)?;
        let vals = t.values();
        let total = stable_sum(vals.iter().copied());
        let mode = ((n + 1) as f64 * p).floor().min(n as f64) as usize;
        let max = vals.iter().copied().fold(0.0, f64::max);
        Ok(fail(
            (total - 1.0).abs() <= 1e-12
                && vals.iter().all(|&b| b >= 0.0)
                && (vals[mode] - max).abs() <= 1e-12 * max
                && (n != 1 || vals == [1.0 - p, p]),
            || format!("n={n} p={p}: total {total:e}, mode {mode}"),
        ))
    })
}

fn check_closed_form(v: &Verifier) -> Result<Option<String>> {
    first_failure(&fine_p_grid(), |&p| {
        let joint = joint_pmf_from_table(p, &v.poisson(p, SINGLE_TABLE_TOL, 0)?)?;
        let closed = expected_discrepancy_single(p)?;
        let summed = joint.expected_abs_difference();
        Ok(fail((closed - summed).abs() <= 1e-12, || {
            format!("p={p}: closed form {closed:e} vs joint sum {summed:e}")
        }))
    })
}

fn check_single_bound(_: &Verifier) -> Result<Option<String>> {
    first_failure(&fine_p_grid(), |&p| {
        let e = expected_discrepancy_single(p)?;
        Ok(fail(e <= p * p, || format!("p={p}: {e:e} > p^2")))
    })
}

fn check_joint_marginals(v: &Verifier) -> Result<Option<String>> {
    first_failure(&fine_p_grid(), |&p| {
        let joint = joint_pmf_from_table(p, &v.poisson(p, SINGLE_TABLE_TOL, 0)?)?;
        let b1 = joint.marginal_b1();
        if (b1 - p).abs() > 1e-12 {
            return Ok(Some(format!("p={p}: P(B=1) = {b1:e}")));
        }
        for (k, &m) in joint.marginal_l().iter().enumerate() {
            let direct = poisson_direct(p, k as u64);
            if (m - direct).abs() > 1e-12 {
                return Ok(Some(format!("p={p}: P(L={k}) = {m:e} vs {direct:e}")));
            }
        }
        Ok(None)
    })
}

fn check_mismatch_identity(v: &Verifier) -> Result<Option<String>> {
    first_failure(&fine_p_grid(), |&p| {
        let joint = joint_pmf_from_table(p, &v.poisson(p, SINGLE_TABLE_TOL, 0)?)?;
        let zero = joint.atom_00 + joint.atoms_k1.first().copied().unwrap_or(0.0);
        let closed = mismatch_probability_single(p)?;
        Ok(fail((1.0 - zero - closed).abs() <= 1e-12, || {
            format!("p={p}: 1 - mass(0) = {:e} vs {closed:e}", 1.0 - zero)
        }))
    })
}

fn check_tv_single(v: &Verifier) -> Result<Option<String>> {
    first_failure(&fine_p_grid(), |&p| {
        let (b, l) = v.tables(1, p, 0)?;
        let tv = tv_distance_from_tables(&b, &l);
        let m = mismatch_probability_single(p)?;
        Ok(fail((tv - m).abs() <= 1e-10, || {
            format!("n=1 p={p}: tv {tv:e} vs {m:e}")
        }))
    })
}

fn grid() -> Vec<(u64, f64)> {
    N_GRID
        .iter()
        .flat_map(|&n| P_GRID.map(|p| (n, p)))
        .collect()
}

fn check_chain(v: &Verifier) -> Result<Option<String>> {
    first_failure(&grid(), |&(n, p)| {
        let (b, l) = v.tables(n, p, 0)?;
        let report = assemble_report(n, p, v.tol, &b, &l)?;
        let slack = 1e-10;
        let ok = report.tv_distance <= report.mismatch_prob + slack
            && report.mismatch_prob <= report.expected_discrepancy + slack
            && report.expected_discrepancy <= report.paper_bound + slack;
        Ok(fail(ok, || {
            format!(
                "n={n} p={p}: tv {:e}, mismatch {:e}, E|L-B| {:e}, np^2 {:e}",
                report.tv_distance,
                report.mismatch_prob,
                report.expected_discrepancy,
                report.paper_bound
            )
        }))
    })
}

fn check_worst_case(v: &Verifier) -> Result<Option<String>> {
    first_failure(&grid(), |&(n, p)| {
        let (b, l) = v.tables(n, p, 0)?;
        let tv = tv_distance_from_tables(&b, &l);
        let (_, gap) = worst_case_set_from_tables(&b, &l)?;
        Ok(fail((tv - gap).abs() <= 1e-10, || {
            format!("n={n} p={p}: tv {tv:e} vs worst gap {gap:e}")
        }))
    })
}

/// Largest index enumerated by the subset search.
pub const SUBSET_RANGE: u64 = 12;

/// Maximum of `set_gap` over every subset of `0..=SUBSET_RANGE`, each with
/// the tail `{SUBSET_RANGE + 1, ...}` both excluded and included.
pub fn exhaustive_max_gap(binomial: &BinomialPmfTable, poisson: &PoissonPmfTable) -> Result<f64> {
    let width = SUBSET_RANGE + 1;
    let mut best = 0.0f64;
    for mask in 0u64..(1 << width) {
        let members = (0..width).filter(|k| mask & (1 << k) != 0);
        let without_tail = SetSpec::explicit(members.clone());
        let with_tail = SetSpec::complement_of((0..width).filter(|k| mask & (1 << k) == 0));
        for d in [without_tail, with_tail] {
            best = best.max(set_gap_from_tables(binomial, poisson, &d)?);
        }
    }
    Ok(best)
}

fn check_exhaustive_supremum(v: &Verifier) -> Result<Option<String>> {
    let cases: Vec<(u64, f64)> = [1u64, 2, 3]
        .iter()
        .flat_map(|&n| [0.1, 0.5].map(|p| (n, p)))
        .collect();
    first_failure(&cases, |&(n, p)| {
        let (b, l) = v.tables(n, p, SUBSET_RANGE)?;
        let best = exhaustive_max_gap(&b, &l)?;
        let tv = tv_distance_from_tables(&b, &l);
        let (_, gap) = worst_case_set_from_tables(&b, &l)?;
        Ok(fail(
            (best - tv).abs() <= 1e-10 && (best - gap).abs() <= 1e-10,
            || format!("n={n} p={p}: enumerated max {best:e}, tv {tv:e}, D* gap {gap:e}"),
        ))
    })
}

/// Law of the n-fold sum by walking the full product of single supports.
pub fn enumerate_sum(single: &DiffDistribution, n: u64) -> DiffDistribution {
    let m = single.masses.len();
    let mut masses = vec![0.0; n as usize * (m - 1) + 1];
    let mut index = vec![0usize; n as usize];
    loop {
        let offset: usize = index.iter().sum();
        let weight: f64 = index.iter().map(|&i| single.masses[i]).product();
        masses[offset] += weight;
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == index.len() {
                return DiffDistribution {
                    min_support: single.min_support * n as i64,
                    masses,
                    tail_mass: 1.0 - (1.0 - single.tail_mass).powi(n as i32),
                };
            }
            index[pos] += 1;
            if index[pos] < m {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

/// Total variation between two difference laws on their common window.
pub fn diff_tv(a: &DiffDistribution, b: &DiffDistribution) -> f64 {
    let lo = a.min_support.min(b.min_support);
    let hi = a.max_support().max(b.max_support());
    0.5 * stable_sum((lo..=hi).map(|d| (a.mass(d) - b.mass(d)).abs()))
}

fn check_convolution(v: &Verifier) -> Result<Option<String>> {
    let cases: Vec<(u64, f64)> = (1u64..=4)
        .flat_map(|n| [0.1, 0.3].map(|p| (n, p)))
        .collect();
    first_failure(&cases, |&(n, p)| {
        let conv = nfold_diff_distribution(n, p, v.tol)?;
        let single = single_diff_distribution(p, v.tol / (2 * n) as f64 * 1e-3)?;
        let brute = enumerate_sum(&single, n);
        let tv = diff_tv(&conv, &brute);
        let mean = conv.mean();
        Ok(fail(tv <= 1e-9 && mean.abs() <= 1e-9, || {
            format!("n={n} p={p}: tv to enumeration {tv:e}, mean {mean:e}")
        }))
    })
}

fn check_complement_symmetry(v: &Verifier) -> Result<Option<String>> {
    let sets = [
        SetSpec::explicit([0]),
        SetSpec::explicit([1, 3, 4]),
        SetSpec::Interval { lo: 2, hi: None },
        SetSpec::Interval { lo: 1, hi: Some(3) },
        SetSpec::complement_of([0, 2]),
    ];
    first_failure(&grid(), |&(n, p)| {
        let (b, l) = v.tables(n, p, 10)?;
        for d in &sets {
            let g = set_gap_from_tables(&b, &l, d)?;
            let gc = set_gap_from_tables(&b, &l, &d.complement())?;
            if (g - gc).abs() > 1e-12 {
                return Ok(Some(format!(
                    "n={n} p={p} D={d}: {g:e} vs complement {gc:e}"
                )));
            }
        }
        Ok(None)
    })
}
