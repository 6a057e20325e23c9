//! Exact pmf tables for the Poisson and Binomial laws.
//!
//! Poisson probabilities are produced by the multiplicative recurrence
//! `r_{k+1} = r_k * rate / (k + 1)` seeded at `r_0 = e^{-rate}`. The infinite
//! support is cut at the first index `K >= ceil(rate)` whose ratio-test tail
//! envelope
//!
//! ```text
//! r_K * (rate / (K + 1)) / (1 - rate / (K + 2))
//! ```
//!
//! is at most the requested tolerance, so the discarded mass is certified.
//!
//! Binomial probabilities are seeded at the mode in log space and extended in
//! both directions with the ratio recurrence, then normalized with a
//! compensated sum.

use serde::Serialize;

use crate::error::{check_n, Error, Result};
use crate::numeric::{stable_sum, CompensatedSum};

/// Largest `x` for which `e^{-x}` is still a normal double.
const MAX_DIRECT_EXP: f64 = 700.0;

/// Rates above this would need tables too large to be useful.
pub const MAX_RATE: f64 = 1e7;

/// Largest supported number of binomial trials.
pub const MAX_TRIALS: u64 = 100_000_000;

/// Read access to a pmf on the non-negative integers.
pub trait DiscretePmf {
    /// Probability of `k`, or `None` when `k` lies beyond the tabulated range.
    fn pmf(&self, k: u64) -> Option<f64>;

    /// Number of leading indices `0..len` whose pmf is known.
    fn covered_len(&self) -> u64;

    /// Mass carried by the indices beyond the tabulated range.
    fn uncovered_mass(&self) -> f64;
}

/// Truncated Poisson pmf with partial sums and a certified tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonPmfTable {
    pub(crate) rate: f64,
    pub(crate) tol: f64,
    pub(crate) values: Vec<f64>,
    pub(crate) partial_sums: Vec<f64>,
    pub(crate) tail_mass: f64,
    pub(crate) tail_bound: f64,
}

impl PoissonPmfTable {
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Tolerance the table was built against.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `r_0, ..., r_K`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `s_0, ..., s_K` with `s_k = r_0 + ... + r_k`.
    pub fn partial_sums(&self) -> &[f64] {
        &self.partial_sums
    }

    /// The last tabulated index `K`.
    pub fn truncation_index(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// `1 - s_K`, the mass not represented in the table, capped by
    /// [`Self::tail_bound`].
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Analytic upper bound on the mass beyond `K` that ended the recurrence.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}

impl DiscretePmf for PoissonPmfTable {
    fn pmf(&self, k: u64) -> Option<f64> {
        usize::try_from(k)
            .ok()
            .and_then(|k| self.values.get(k).copied())
    }

    fn covered_len(&self) -> u64 {
        self.values.len() as u64
    }

    fn uncovered_mass(&self) -> f64 {
        self.tail_mass
    }
}

fn check_rate_and_tol(rate: f64, tol: f64) -> Result<()> {
    if !(rate > 0.0 && rate <= MAX_RATE) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            domain: "(0, 1e7]",
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "(0, 1)",
        });
    }
    Ok(())
}

/// Builds the Poisson table for `rate` with certified tail mass at most `tol`.
pub fn poisson_table(rate: f64, tol: f64) -> Result<PoissonPmfTable> {
    poisson_table_covering(rate, tol, 0)
}

/// Like [`poisson_table`], but the table extends at least to `min_index`.
pub fn poisson_table_covering(rate: f64, tol: f64, min_index: u64) -> Result<PoissonPmfTable> {
    check_rate_and_tol(rate, tol)?;
    let min_index = usize::try_from(min_index).map_err(|_| Error::Domain {
        name: "min_index",
        value: min_index as f64,
        domain: "addressable table length",
    })?;

    // For large rates e^{-rate} underflows, so the seed only carries part of
    // the exponential and the remainder (`pending`) is applied to the whole
    // table once the running values have grown large.
    let seed_exponent = rate.min(MAX_DIRECT_EXP);
    let mut pending = rate - seed_exponent;
    let mut values = vec![(-seed_exponent).exp()];
    let first_candidate = rate.ceil() as usize;

    let tail_bound = loop {
        let k = values.len() - 1;
        if k >= first_candidate && k >= min_index {
            let ratio_next = rate / (k + 1) as f64;
            let envelope = ratio_next / (1.0 - rate / (k + 2) as f64);
            let bound = if pending > 0.0 {
                (values[k].ln() - pending + envelope.ln()).exp()
            } else {
                values[k] * envelope
            };
            if bound <= tol {
                break bound;
            }
        }
        let next = values[k] * rate / (k + 1) as f64;
        values.push(next);
        if pending > 0.0 && next > 1e200 {
            let step = pending.min(400.0);
            let scale = (-step).exp();
            values.iter_mut().for_each(|v| *v *= scale);
            pending -= step;
        }
    };
    if pending > 0.0 {
        let scale = (-pending).exp();
        values.iter_mut().for_each(|v| *v *= scale);
    }

    let mut acc = CompensatedSum::new();
    let partial_sums: Vec<f64> = values
        .iter()
        .map(|&v| {
            acc.add(v);
            acc.value()
        })
        .collect();
    // Rounding in the recurrence can leave `1 - s_K` a few ulps above the
    // certified bound.
    let tail_mass = (1.0 - partial_sums[partial_sums.len() - 1]).clamp(0.0, tail_bound);

    Ok(PoissonPmfTable {
        rate,
        tol,
        values,
        partial_sums,
        tail_mass,
        tail_bound,
    })
}

/// `s_k` from the table's partial sums.
pub fn poisson_cdf(table: &PoissonPmfTable, k: u64) -> Result<f64> {
    usize::try_from(k)
        .ok()
        .and_then(|i| table.partial_sums.get(i).copied())
        .ok_or(Error::IndexBeyondTable {
            index: k,
            truncation_index: table.truncation_index(),
        })
}

/// Full Binomial(n, p) pmf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialPmfTable {
    trials: u64,
    success_prob: f64,
    values: Vec<f64>,
}

impl BinomialPmfTable {
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    /// `b_0, ..., b_n`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Indices past `n` are uncovered but carry no mass.
impl DiscretePmf for BinomialPmfTable {
    fn pmf(&self, k: u64) -> Option<f64> {
        usize::try_from(k)
            .ok()
            .and_then(|k| self.values.get(k).copied())
    }

    fn covered_len(&self) -> u64 {
        self.values.len() as u64
    }

    fn uncovered_mass(&self) -> f64 {
        0.0
    }
}

/// `ln C(n, k)` by accumulating `ln((n - j + i) / i)` over the shorter side.
fn ln_binomial_coefficient(n: u64, k: u64) -> f64 {
    let j = k.min(n - k);
    stable_sum((1..=j).map(|i| ((n - j + i) as f64 / i as f64).ln()))
}

/// Builds the Binomial(n, p) table. `p = 0` and `p = 1` give point masses.
pub fn binomial_table(n: u64, p: f64) -> Result<BinomialPmfTable> {
    check_n(n)?;
    if n > MAX_TRIALS {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            domain: "n <= 1e8",
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "[0, 1]",
        });
    }
    let len = n as usize + 1;
    let mut values = vec![0.0; len];
    if p == 0.0 {
        values[0] = 1.0;
    } else if p == 1.0 {
        values[len - 1] = 1.0;
    } else if n == 1 {
        values[0] = 1.0 - p;
        values[1] = p;
    } else {
        let q = 1.0 - p;
        let odds = p / q;
        let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
        let ln_mode = ln_binomial_coefficient(n, mode)
            + mode as f64 * p.ln()
            + (n - mode) as f64 * (-p).ln_1p();
        let m = mode as usize;
        values[m] = ln_mode.exp();
        for k in m..n as usize {
            values[k + 1] = values[k] * ((n as usize - k) as f64 / (k + 1) as f64) * odds;
        }
        for k in (1..=m).rev() {
            values[k - 1] = values[k] * (k as f64 / (n as usize - k + 1) as f64) / odds;
        }
        let total = stable_sum(values.iter().copied());
        values.iter_mut().for_each(|v| *v /= total);
    }
    Ok(BinomialPmfTable {
        trials: n,
        success_prob: p,
        values,
    })
}
