//! Exact comparison of Binomial(n, p) with Poisson(np): set probabilities,
//! total variation, the maximizing set, and the full bound chain
//!
//! ```text
//! |P(L in D) - P(B in D)| <= P(L != B) <= E|L - B| <= n p^2
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling::nfold_diff_distribution;
use crate::distributions::{
    binomial_table, poisson_table_covering, BinomialPmfTable, DiscretePmf, PoissonPmfTable,
};
use crate::error::{check_n, check_open_unit, Error, Result};
use crate::numeric::{stable_sum, CompensatedSum};

/// Slack allowed on each inequality of the chain before it counts as violated.
pub const CHAIN_SLACK: f64 = 1e-12;

/// Default tolerance: `1e-12`, scaled up linearly once `np > 100`.
pub fn default_tolerance(n: u64, p: f64) -> f64 {
    1e-12 * (n as f64 * p / 100.0).max(1.0)
}

/// A set of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// Exactly the listed members.
    Explicit { members: BTreeSet<u64> },
    /// `lo..=hi`, or `lo..` when `hi` is `None`.
    Interval { lo: u64, hi: Option<u64> },
    /// Every non-negative integer except the listed members.
    Complement { members: BTreeSet<u64> },
}

impl SetSpec {
    pub fn explicit<I: IntoIterator<Item = u64>>(members: I) -> Self {
        SetSpec::Explicit {
            members: members.into_iter().collect(),
        }
    }

    pub fn complement_of<I: IntoIterator<Item = u64>>(members: I) -> Self {
        SetSpec::Complement {
            members: members.into_iter().collect(),
        }
    }

    pub fn interval(lo: u64, hi: Option<u64>) -> Result<Self> {
        match hi {
            Some(hi) if hi < lo => Err(Error::Config(format!("empty interval {lo}..{hi}"))),
            _ => Ok(SetSpec::Interval { lo, hi }),
        }
    }

    /// All non-negative integers.
    pub fn everything() -> Self {
        SetSpec::Interval { lo: 0, hi: None }
    }

    pub fn contains(&self, k: u64) -> bool {
        match self {
            SetSpec::Explicit { members } => members.contains(&k),
            SetSpec::Interval { lo, hi } => k >= *lo && hi.is_none_or(|hi| k <= hi),
            SetSpec::Complement { members } => !members.contains(&k),
        }
    }

    /// The complementary set.
    pub fn complement(&self) -> Self {
        match self {
            SetSpec::Explicit { members } => SetSpec::Complement {
                members: members.clone(),
            },
            SetSpec::Complement { members } => SetSpec::Explicit {
                members: members.clone(),
            },
            SetSpec::Interval { lo, hi: None } => SetSpec::explicit(0..*lo),
            SetSpec::Interval { lo, hi: Some(hi) } => SetSpec::complement_of(*lo..=*hi),
        }
    }

    /// Largest integer whose membership must be resolved explicitly.
    pub fn max_listed(&self) -> u64 {
        match self {
            SetSpec::Explicit { members } | SetSpec::Complement { members } => {
                members.last().copied().unwrap_or(0)
            }
            SetSpec::Interval { lo, hi } => hi.unwrap_or(*lo),
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |members: &BTreeSet<u64>| {
            members
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            SetSpec::Explicit { members } => write!(f, "{}", list(members)),
            SetSpec::Complement { members } => write!(f, "!{}", list(members)),
            SetSpec::Interval { lo, hi: None } => write!(f, "{lo}.."),
            SetSpec::Interval { lo, hi: Some(hi) } => write!(f, "{lo}..{hi}"),
        }
    }
}

/// Parses `0,2,5`, `3..`, `3..7` and `!0,1`. The empty string is the empty set.
impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_u64 = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("invalid set member `{t}`")))
        };
        let parse_list = |t: &str| -> Result<BTreeSet<u64>> {
            if t.trim().is_empty() {
                return Ok(BTreeSet::new());
            }
            t.split(',').map(parse_u64).collect()
        };
        if let Some(rest) = s.strip_prefix('!') {
            return Ok(SetSpec::Complement {
                members: parse_list(rest)?,
            });
        }
        if let Some((lo, hi)) = s.split_once("..") {
            let lo = parse_u64(lo)?;
            let hi = if hi.trim().is_empty() {
                None
            } else {
                Some(parse_u64(hi)?)
            };
            return SetSpec::interval(lo, hi);
        }
        Ok(SetSpec::Explicit {
            members: parse_list(s)?,
        })
    }
}

fn sum_over<T: DiscretePmf + ?Sized>(
    table: &T,
    ks: impl Iterator<Item = u64>,
    accuracy: f64,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in ks {
        match table.pmf(k) {
            Some(v) => acc.add(v),
            None if table.uncovered_mass() <= accuracy => {}
            None => {
                return Err(Error::TableCoverage {
                    requested: k as f64,
                    required_tol: accuracy,
                })
            }
        }
    }
    Ok(acc.value())
}

/// `P(X in D)` with an accuracy requirement for members beyond the table.
///
/// Explicit members past the tabulated range count as zero when the table's
/// unrepresented mass is at most `accuracy`, and are an error otherwise.
/// Complements and unbounded intervals are computed as one minus a finite
/// sum, so they carry the unrepresented mass exactly.
pub fn set_probability_within<T: DiscretePmf + ?Sized>(
    table: &T,
    d: &SetSpec,
    accuracy: f64,
) -> Result<f64> {
    match d {
        SetSpec::Explicit { members } => sum_over(table, members.iter().copied(), accuracy),
        SetSpec::Complement { members } => {
            Ok(1.0 - sum_over(table, members.iter().copied(), accuracy)?)
        }
        SetSpec::Interval { lo, hi: Some(hi) } => {
            let last_covered = table.covered_len().saturating_sub(1);
            let end = (*hi).min(last_covered);
            let inside = if *lo <= end {
                sum_over(table, *lo..=end, accuracy)?
            } else {
                0.0
            };
            if *hi > last_covered && table.uncovered_mass() > accuracy {
                return Err(Error::TableCoverage {
                    requested: *hi as f64,
                    required_tol: accuracy,
                });
            }
            Ok(inside)
        }
        SetSpec::Interval { lo, hi: None } => Ok(1.0 - sum_over(table, 0..*lo, accuracy)?),
    }
}

/// `P(X in D)`, accepting truncation error up to the table's own tail mass.
pub fn set_probability<T: DiscretePmf + ?Sized>(table: &T, d: &SetSpec) -> Result<f64> {
    set_probability_within(table, d, table.uncovered_mass())
}

pub(crate) fn tables_for(
    n: u64,
    p: f64,
    tol: f64,
    min_index: u64,
) -> Result<(BinomialPmfTable, PoissonPmfTable)> {
    check_n(n)?;
    check_open_unit("p", p)?;
    let binomial = binomial_table(n, p)?;
    let poisson = poisson_table_covering(n as f64 * p, tol, n.max(min_index))?;
    Ok((binomial, poisson))
}

/// `|P(Poisson(np) in D) - P(Binomial(n, p) in D)|`.
pub fn set_gap(n: u64, p: f64, d: &SetSpec, tol: f64) -> Result<f64> {
    let (binomial, poisson) = tables_for(n, p, tol, d.max_listed())?;
    set_gap_from_tables(&binomial, &poisson, d)
}

pub fn set_gap_from_tables(
    binomial: &BinomialPmfTable,
    poisson: &PoissonPmfTable,
    d: &SetSpec,
) -> Result<f64> {
    Ok((set_probability(poisson, d)? - set_probability(binomial, d)?).abs())
}

/// Total variation distance between Binomial(n, p) and Poisson(np).
pub fn tv_distance(n: u64, p: f64, tol: f64) -> Result<f64> {
    let (binomial, poisson) = tables_for(n, p, tol, 0)?;
    Ok(tv_distance_from_tables(&binomial, &poisson))
}

/// Half the L1 distance of the two tables. Mass beyond the Poisson table is
/// pure Poisson mass when the table reaches index `n`, and enters exactly.
pub fn tv_distance_from_tables(binomial: &BinomialPmfTable, poisson: &PoissonPmfTable) -> f64 {
    let len = poisson.values().len().max(binomial.values().len());
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let l1 = stable_sum(
        (0..len)
            .map(|k| (at(poisson.values(), k) - at(binomial.values(), k)).abs())
            .chain(std::iter::once(poisson.tail_mass())),
    );
    0.5 * l1
}

/// The set `{k : Poisson pmf(k) > Binomial pmf(k)}` and its gap.
pub fn worst_case_set(n: u64, p: f64, tol: f64) -> Result<(SetSpec, f64)> {
    let (binomial, poisson) = tables_for(n, p, tol, 0)?;
    worst_case_set_from_tables(&binomial, &poisson)
}

/// Every `k > n` has zero binomial mass and positive Poisson mass, so the
/// maximizing set is the complement of a subset of `0..=n`.
pub fn worst_case_set_from_tables(
    binomial: &BinomialPmfTable,
    poisson: &PoissonPmfTable,
) -> Result<(SetSpec, f64)> {
    let excluded = binomial
        .values()
        .iter()
        .enumerate()
        .filter(|&(k, &b)| poisson.values().get(k).copied().unwrap_or(0.0) <= b)
        .map(|(k, _)| k as u64);
    let d = SetSpec::complement_of(excluded);
    let gap = set_gap_from_tables(binomial, poisson, &d)?;
    Ok((d, gap))
}

/// Every quantity of the bound chain for one `(n, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub p: f64,
    pub tol: f64,
    pub tv_distance: f64,
    pub worst_set: SetSpec,
    pub worst_set_gap: f64,
    /// `P(L != B)` under the summed coupling.
    pub mismatch_prob: f64,
    /// Exact `E|L - B|` from the convolution.
    pub expected_discrepancy: f64,
    /// Markov bound on `P(|L - B| >= 1)`; equal to `expected_discrepancy`.
    pub markov_bound: f64,
    /// `n p^2`.
    pub paper_bound: f64,
}

/// One relation of the chain and whether it holds within the slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainVerdict {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundReport {
    /// Slack used for the inequalities: the larger of [`CHAIN_SLACK`] and
    /// the truncation tolerance.
    pub fn slack(&self) -> f64 {
        CHAIN_SLACK.max(self.tol)
    }

    pub fn verdicts(&self) -> Vec<ChainVerdict> {
        let slack = self.slack();
        let le = |relation: &str, lhs: f64, rhs: f64| ChainVerdict {
            relation: relation.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs + slack,
        };
        vec![
            ChainVerdict {
                relation: "tv_distance = worst_set_gap".to_string(),
                lhs: self.tv_distance,
                rhs: self.worst_set_gap,
                holds: (self.tv_distance - self.worst_set_gap).abs() <= 1e-10_f64.max(self.tol),
            },
            le(
                "tv_distance <= mismatch_prob",
                self.tv_distance,
                self.mismatch_prob,
            ),
            le(
                "mismatch_prob <= expected_discrepancy",
                self.mismatch_prob,
                self.expected_discrepancy,
            ),
            le(
                "expected_discrepancy <= paper_bound",
                self.expected_discrepancy,
                self.paper_bound,
            ),
        ]
    }

    pub fn holds(&self) -> bool {
        self.verdicts().iter().all(|v| v.holds)
    }
}

pub(crate) fn assemble_report(
    n: u64,
    p: f64,
    tol: f64,
    binomial: &BinomialPmfTable,
    poisson: &PoissonPmfTable,
) -> Result<BoundReport> {
    let tv = tv_distance_from_tables(binomial, poisson);
    let (worst_set, worst_set_gap) = worst_case_set_from_tables(binomial, poisson)?;
    let diff = nfold_diff_distribution(n, p, tol)?;
    let expected_discrepancy = diff.expected_abs();
    Ok(BoundReport {
        n,
        p,
        tol,
        tv_distance: tv,
        worst_set,
        worst_set_gap,
        mismatch_prob: diff.nonzero_probability(),
        expected_discrepancy,
        markov_bound: expected_discrepancy,
        paper_bound: n as f64 * p * p,
    })
}

pub(crate) fn audit(report: BoundReport) -> Result<BoundReport> {
    match report.verdicts().into_iter().find(|v| !v.holds) {
        None => Ok(report),
        Some(v) => Err(Error::Inconsistent {
            violation: format!("{} fails: {:e} vs {:e}", v.relation, v.lhs, v.rhs),
            report: Box::new(report),
        }),
    }
}

/// Computes and audits the bound chain; a failed relation is an
/// [`Error::Inconsistent`] carrying the report.
pub fn bound_report(n: u64, p: f64, tol: f64) -> Result<BoundReport> {
    check_open_unit("tol", tol)?;
    let (binomial, poisson) = tables_for(n, p, tol, 0)?;
    audit(assemble_report(n, p, tol, &binomial, &poisson)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::mismatch_probability_single;
    use crate::distributions::poisson_table;

    #[test]
    fn set_spec_parsing() {
        assert_eq!(
            "0,2,5".parse::<SetSpec>().unwrap(),
            SetSpec::explicit([0, 2, 5])
        );
        assert_eq!(
            "3..".parse::<SetSpec>().unwrap(),
            SetSpec::Interval { lo: 3, hi: None }
        );
        assert_eq!(
            "3..7".parse::<SetSpec>().unwrap(),
            SetSpec::Interval { lo: 3, hi: Some(7) }
        );
        assert_eq!(
            "!0,1".parse::<SetSpec>().unwrap(),
            SetSpec::complement_of([0, 1])
        );
        assert_eq!("".parse::<SetSpec>().unwrap(), SetSpec::explicit([]));
        assert!("7..3".parse::<SetSpec>().is_err());
        assert!("a,b".parse::<SetSpec>().is_err());
        assert!("-1".parse::<SetSpec>().is_err());
        for s in ["0,2,5", "3..", "3..7", "!0,1"] {
            assert_eq!(s.parse::<SetSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn set_spec_membership_and_complement() {
        let sets = [
            SetSpec::explicit([1, 4]),
            SetSpec::complement_of([0, 3]),
            SetSpec::Interval { lo: 2, hi: None },
            SetSpec::Interval { lo: 2, hi: Some(5) },
        ];
        for d in &sets {
            let c = d.complement();
            for k in 0..20 {
                assert_ne!(d.contains(k), c.contains(k), "{d} at {k}");
            }
        }
    }

    #[test]
    fn set_probability_examples() {
        let b = binomial_table(2, 0.5).unwrap();
        let full = set_probability(&b, &SetSpec::explicit([0, 1, 2])).unwrap();
        assert!((full - 1.0).abs() < 1e-15);
        assert!((set_probability(&b, &SetSpec::explicit([1])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            set_probability(&b, &SetSpec::explicit([3, 40])).unwrap(),
            0.0
        );
        let bounded = SetSpec::Interval {
            lo: 1,
            hi: Some(1_000_000),
        };
        assert!((set_probability(&b, &bounded).unwrap() - 0.75).abs() < 1e-15);

        let pois = poisson_table(0.5, 1e-12).unwrap();
        let p0 = set_probability(&pois, &SetSpec::explicit([0])).unwrap();
        assert!((p0 - 0.606_530_659_7).abs() < 1e-10);
        // Unbounded interval picks up the tail exactly.
        let upper = set_probability(&pois, &SetSpec::Interval { lo: 1, hi: None }).unwrap();
        assert!((upper - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn set_probability_beyond_coverage() {
        let pois = poisson_table(0.5, 1e-3).unwrap();
        let far = SetSpec::explicit([pois.truncation_index() + 5]);
        assert_eq!(set_probability(&pois, &far).unwrap(), 0.0);
        assert!(matches!(
            set_probability_within(&pois, &far, pois.tail_mass() / 10.0),
            Err(Error::TableCoverage { .. })
        ));
    }

    #[test]
    fn set_gap_examples() {
        assert!(set_gap(7, 0.2, &SetSpec::everything(), 1e-12).unwrap() < 1e-15);
        let g = set_gap(1, 0.5, &SetSpec::explicit([0]), 1e-12).unwrap();
        assert!((g - 0.106_530_659_7).abs() < 1e-10);
        let g = set_gap(10, 0.1, &SetSpec::explicit([0]), 1e-12).unwrap();
        let oracle = ((-1.0f64).exp() - 0.9f64.powi(10)).abs();
        assert!((g - oracle).abs() < 1e-15);
        assert!((g - 0.019_201_0).abs() < 1e-7);
    }

    #[test]
    fn tv_examples() {
        let tv = tv_distance(1, 0.5, 1e-12).unwrap();
        assert!((tv - 0.196_734_670_1).abs() < 1e-10);
        assert!((tv - mismatch_probability_single(0.5).unwrap()).abs() < 1e-12);
        assert!(tv_distance(10, 0.01, 1e-12).unwrap() <= 0.001);
        for &(n, p) in &[(3u64, 0.2), (40, 0.05), (500, 0.01)] {
            assert!(tv_distance(n, p, 1e-12).unwrap() <= n as f64 * p * p);
        }
    }

    #[test]
    fn worst_case_set_examples() {
        let (d, gap) = worst_case_set(1, 0.5, 1e-12).unwrap();
        assert_eq!(d, SetSpec::complement_of([1]));
        assert!(d.contains(0) && !d.contains(1) && d.contains(2) && d.contains(99));
        assert!((gap - 0.196_734_670_1).abs() < 1e-10);
        for &(n, p) in &[(2u64, 0.1), (30, 0.2), (100, 0.001)] {
            let (_, gap) = worst_case_set(n, p, 1e-12).unwrap();
            assert!((gap - tv_distance(n, p, 1e-12).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn worst_case_dominates_small_subsets() {
        let (binomial, poisson) = tables_for(2, 0.1, 1e-12, 12).unwrap();
        let (_, best) = worst_case_set_from_tables(&binomial, &poisson).unwrap();
        for mask in 0u32..(1 << 13) {
            let d = SetSpec::explicit((0..13).filter(|k| mask & (1 << k) != 0));
            let gap = set_gap_from_tables(&binomial, &poisson, &d).unwrap();
            assert!(gap <= best + 1e-15);
        }
    }

    #[test]
    fn bound_report_examples() {
        let r = bound_report(1, 0.1, 1e-12).unwrap();
        assert!((r.paper_bound - 0.01).abs() < 1e-17);
        assert!((r.expected_discrepancy - 0.009_674_836_0).abs() < 1e-10);
        assert_eq!(r.markov_bound, r.expected_discrepancy);
        let r = bound_report(20, 0.05, 1e-12).unwrap();
        assert!((r.paper_bound - 0.05).abs() < 1e-15);
        let r = bound_report(1, 0.001, 1e-12).unwrap();
        assert!(r.tv_distance <= 1e-6 && r.mismatch_prob <= 1e-6 && r.expected_discrepancy <= 1e-6);
        assert!(r.holds());
    }

    #[test]
    fn audit_reports_violations() {
        let mut r = bound_report(5, 0.1, 1e-12).unwrap();
        r.expected_discrepancy = r.paper_bound * 2.0;
        match audit(r) {
            Err(Error::Inconsistent { violation, report }) => {
                assert!(violation.contains("expected_discrepancy <= paper_bound"));
                assert_eq!(report.n, 5);
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn default_tolerance_scales() {
        assert_eq!(default_tolerance(10, 0.1), 1e-12);
        assert!((default_tolerance(1000, 0.5) - 5e-12).abs() < 1e-25);
    }
}
