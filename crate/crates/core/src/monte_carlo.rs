//! Seeded simulation of the summed coupling.
//!
//! Replications are split into `streams` contiguous blocks; block `s` draws
//! from ChaCha8 seeded with `seed` on stream `s`. Each replication consumes
//! exactly `n` uniforms. Per-stream statistics are exact integer sums, so
//! the merged result does not depend on the order in which streams finish.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximation::SetSpec;
use crate::coupling::couple_from_uniform;
use crate::distributions::{poisson_table, PoissonPmfTable};
use crate::error::{check_open_unit, Error, Result};

/// Identifies the uniform generator in every summary.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9/stream-per-block";

/// Tail tolerance of the per-component table; far below the resolution of
/// the generated uniforms.
const SAMPLING_TABLE_TOL: f64 = 1e-17;

/// A source of uniforms on the open interval (0, 1).
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

/// One ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }
}

impl UniformSource for StreamRng {
    /// `(x + 1/2) / 2^52` for a 52-bit integer `x`: never 0, never 1.
    fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * f64::EPSILON
    }
}

/// Wraps a source and counts the uniforms drawn from it.
#[derive(Debug)]
pub struct CountingSource<S> {
    inner: S,
    count: Arc<AtomicU64>,
}

impl<S> CountingSource<S> {
    pub fn new(inner: S, count: Arc<AtomicU64>) -> Self {
        Self { inner, count }
    }
}

impl<S: UniformSource> UniformSource for CountingSource<S> {
    fn next_uniform(&mut self) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.next_uniform()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u64,
    pub p: f64,
    pub reps: u64,
    pub seed: u64,
    pub streams: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        check_open_unit("p", self.p)?;
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.streams == 0 || self.streams > self.reps {
            return Err(Error::Config(format!(
                "streams must lie in 1..={} (reps), got {}",
                self.reps, self.streams
            )));
        }
        Ok(())
    }

    /// Replications assigned to `stream`; the first `reps % streams` blocks
    /// take one extra.
    pub fn stream_reps(&self, stream: u64) -> u64 {
        let base = self.reps / self.streams;
        base + u64::from(stream < self.reps % self.streams)
    }
}

/// Sample mean and standard error of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub statistic: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(reps)`; 0 when `degenerate`.
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
    pub streams: u64,
    pub generator: String,
    /// Set when a single replication leaves no spread estimate.
    pub degenerate: bool,
}

impl EstimateSummary {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Exact running sums of an integer statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    sum: i128,
    sum_sq: i128,
    count: u64,
}

impl Moments {
    fn push(&mut self, x: i64) {
        let x = x as i128;
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    fn merge(self, other: Self) -> Self {
        Self {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            count: self.count + other.count,
        }
    }

    fn summarize(&self, statistic: &str, cfg: &SimConfig, absolute: bool) -> EstimateSummary {
        let reps = self.count as f64;
        let mean = self.sum as f64 / reps;
        let degenerate = self.count < 2;
        let std_error = if degenerate {
            0.0
        } else {
            let r = self.count as i128;
            let centered = r * self.sum_sq - self.sum * self.sum;
            let variance = centered as f64 / (reps * (reps - 1.0));
            (variance.max(0.0) / reps).sqrt()
        };
        EstimateSummary {
            statistic: statistic.to_string(),
            mean: if absolute { mean.abs() } else { mean },
            std_error,
            reps: self.count,
            seed: cfg.seed,
            streams: cfg.streams,
            generator: GENERATOR.to_string(),
            degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct StreamTotals {
    discrepancy: Moments,
    mismatch: Moments,
    set_gap: Moments,
}

impl StreamTotals {
    fn merge(self, other: Self) -> Self {
        Self {
            discrepancy: self.discrepancy.merge(other.discrepancy),
            mismatch: self.mismatch.merge(other.mismatch),
            set_gap: self.set_gap.merge(other.set_gap),
        }
    }
}

/// All estimators evaluated on the same coupled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledEstimates {
    /// `|L - B|`.
    pub discrepancy: EstimateSummary,
    /// `1[L != B]`.
    pub mismatch: EstimateSummary,
    /// `|mean(1[L in D] - 1[B in D])|`, when a set was supplied.
    pub set_gap: Option<EstimateSummary>,
}

fn run_stream<S: UniformSource>(
    cfg: &SimConfig,
    stream: u64,
    source: &mut S,
    table: &PoissonPmfTable,
    mut visit: impl FnMut(u64, u64),
) -> Result<()> {
    for _ in 0..cfg.stream_reps(stream) {
        let mut l_sum = 0u64;
        let mut b_sum = 0u64;
        for _ in 0..cfg.n {
            let pair = couple_from_uniform(cfg.p, source.next_uniform(), table)?;
            l_sum += pair.l;
            b_sum += u64::from(pair.b);
        }
        visit(l_sum, b_sum);
    }
    Ok(())
}

/// Runs the simulation with caller-provided uniform sources, one per stream.
pub fn simulate_with<S, F>(
    cfg: &SimConfig,
    set: Option<&SetSpec>,
    make_source: F,
) -> Result<CoupledEstimates>
where
    S: UniformSource,
    F: Fn(u64) -> S + Sync,
{
    cfg.validate()?;
    let table = poisson_table(cfg.p, SAMPLING_TABLE_TOL)?;
    let per_stream: Vec<StreamTotals> = (0..cfg.streams)
        .into_par_iter()
        .map(|stream| {
            let mut source = make_source(stream);
            let mut totals = StreamTotals::default();
            run_stream(cfg, stream, &mut source, &table, |l, b| {
                totals.discrepancy.push(l.abs_diff(b) as i64);
                totals.mismatch.push(i64::from(l != b));
                if let Some(d) = set {
                    totals
                        .set_gap
                        .push(i64::from(d.contains(l)) - i64::from(d.contains(b)));
                }
            })?;
            Ok(totals)
        })
        .collect::<Result<_>>()?;
    let totals = per_stream
        .into_iter()
        .fold(StreamTotals::default(), StreamTotals::merge);
    Ok(CoupledEstimates {
        discrepancy: totals.discrepancy.summarize("discrepancy", cfg, false),
        mismatch: totals.mismatch.summarize("mismatch", cfg, false),
        set_gap: set.map(|_| totals.set_gap.summarize("set_gap", cfg, true)),
    })
}

/// Runs the simulation on the default ChaCha8 streams.
pub fn simulate(cfg: &SimConfig, set: Option<&SetSpec>) -> Result<CoupledEstimates> {
    simulate_with(cfg, set, |stream| StreamRng::new(cfg.seed, stream))
}

/// Estimate of `E|L - B|`.
pub fn estimate_discrepancy(cfg: &SimConfig) -> Result<EstimateSummary> {
    Ok(simulate(cfg, None)?.discrepancy)
}

/// Estimate of `P(L != B)`.
pub fn estimate_mismatch(cfg: &SimConfig) -> Result<EstimateSummary> {
    Ok(simulate(cfg, None)?.mismatch)
}

/// Estimate of `|P(L in D) - P(B in D)|` from the coupled samples.
pub fn estimate_set_gap(cfg: &SimConfig, d: &SetSpec) -> Result<EstimateSummary> {
    simulate(cfg, Some(d))?
        .set_gap
        .ok_or_else(|| Error::Config("set gap estimate missing".into()))
}

/// The raw `(sum L, sum B)` pairs in stream order.
pub fn sample_pairs(cfg: &SimConfig) -> Result<Vec<(u64, u64)>> {
    cfg.validate()?;
    let table = poisson_table(cfg.p, SAMPLING_TABLE_TOL)?;
    let blocks: Vec<Vec<(u64, u64)>> = (0..cfg.streams)
        .into_par_iter()
        .map(|stream| {
            let mut source = StreamRng::new(cfg.seed, stream);
            let mut out = Vec::with_capacity(cfg.stream_reps(stream) as usize);
            run_stream(cfg, stream, &mut source, &table, |l, b| out.push((l, b)))?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}
