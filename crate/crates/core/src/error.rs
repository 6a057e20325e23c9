use thiserror::Error;

use crate::approximation::BoundReport;

/// Errors produced by table construction, coupling and the exact checks.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("{name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The uniform (or pmf index) falls beyond the truncated table. Rebuild
    /// the table with a tolerance at most `required_tol`.
    #[error("value {requested} lies beyond table coverage; rebuild with tol <= {required_tol:e}")]
    TableCoverage { requested: f64, required_tol: f64 },

    /// A pmf index beyond the truncated Poisson table was requested.
    #[error("index {index} is beyond the table truncation index {truncation_index}")]
    IndexBeyondTable { index: u64, truncation_index: u64 },

    /// A table built for one rate was used with another parameter.
    #[error("table rate {table_rate} does not match the requested parameter {expected}")]
    MismatchedTable { table_rate: f64, expected: f64 },

    /// The convolution support grew past the configured cap.
    #[error("support length {len} exceeds the cap of {cap}")]
    SupportCap { len: usize, cap: usize },

    /// A simulation or sweep configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// One of the bound-chain inequalities failed on computed values.
    #[error("inconsistent bound chain: {violation}")]
    Inconsistent {
        violation: String,
        report: Box<BoundReport>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, 1)",
        })
    }
}

pub(crate) fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::Domain {
            name: "n",
            value: 0.0,
            domain: "n >= 1",
        })
    } else {
        Ok(())
    }
}
