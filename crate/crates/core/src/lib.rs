//! Coupling of Binomial(n, p) and Poisson(np) variables on shared uniforms.
//!
//! Each Bernoulli(p) component is paired with a Poisson(p) variable by
//! applying both quantile functions to one uniform. Summing `n` independent
//! pairs couples Binomial(n, p) with Poisson(np), which bounds
//!
//! ```text
//! |P(L in D) - P(B in D)| <= P(L != B) <= E|L - B| <= n p^2
//! ```
//!
//! uniformly in `D`. The modules compute each side of the chain exactly
//! ([`approximation`], [`coupling`]) and by simulation ([`monte_carlo`]);
//! [`verify`] runs the whole invariant grid.

pub mod approximation;
pub mod coupling;
pub mod distributions;
pub mod error;
pub mod monte_carlo;
pub mod numeric;
pub mod verify;

pub use approximation::{
    bound_report, default_tolerance, set_gap, set_probability, tv_distance, worst_case_set,
    BoundReport, SetSpec,
};
pub use coupling::{
    couple_from_uniform, expected_discrepancy_single, expected_discrepancy_sum, joint_pmf,
    mismatch_probability_single, nfold_diff_distribution, single_diff_distribution,
    sum_coupling_sample, CouplingPair, DiffDistribution, JointPmf,
};
pub use distributions::{
    binomial_table, poisson_cdf, poisson_table, BinomialPmfTable, DiscretePmf, PoissonPmfTable,
};
pub use error::{Error, Result};
pub use monte_carlo::{
    estimate_discrepancy, estimate_mismatch, estimate_set_gap, EstimateSummary, SimConfig,
};
