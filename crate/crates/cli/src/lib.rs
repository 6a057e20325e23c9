//! Command-line front end: bound reports, total variation, sweeps, coupled
//! sampling, joint pmf listings and the verification suite.
//!
//! Exit codes: 0 success, 1 computational failure or I/O error, 2 usage or
//! configuration error.

pub mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poisson_couple::approximation::{set_gap, ChainVerdict};
use poisson_couple::monte_carlo::{sample_pairs, simulate, EstimateSummary, GENERATOR};
use poisson_couple::verify::{check_tolerance, CheckOutcome, Fault, Verifier};
use poisson_couple::{
    bound_report, default_tolerance, joint_pmf, tv_distance, worst_case_set, BoundReport, Error,
    SetSpec, SimConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::render::{banner, human, machine, to_csv, to_json, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "poisson-couple",
    version,
    about = "Coupling checks of the Poisson approximation to the binomial"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Machine-readable output format; human-readable text when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Omit the version banner line.
    #[arg(long, global = true)]
    pub no_banner: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every quantity of the bound chain for one (n, p).
    Bound(PointArgs),
    /// Total variation distance, the maximizing set, and optionally one set gap.
    Tvd(TvdArgs),
    /// Bound chain over a grid of (n, p).
    Sweep(SweepArgs),
    /// Simulate the summed coupling and report estimates.
    Sample(SampleArgs),
    /// Joint pmf of one coupled Bernoulli/Poisson pair.
    Joint(JointArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    /// Truncation tolerance; defaults to 1e-12 scaled up when np > 100.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TvdArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Set D as `0,2,5`, `3..`, `3..7` or `!0,1`.
    #[arg(long, value_parser = parse_set, allow_hyphen_values = true)]
    pub set: Option<SetSpec>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated trial counts.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..),
          default_values_t = [1u64, 2, 5, 10, 50, 100])]
    pub n: Vec<u64>,
    /// Comma-separated success probabilities in (0, 1).
    #[arg(long, value_delimiter = ',', value_parser = parse_probability,
          default_values_t = [0.001, 0.01, 0.05, 0.1, 0.3])]
    pub p: Vec<f64>,
    /// Truncation tolerance for every row; per-row default when omitted.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Seed; falls back to POISSON_COUPLE_SEED, then 0.
    #[arg(long, env = "POISSON_COUPLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Parallel streams; defaults to the available parallelism.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub streams: Option<u64>,
    /// Also estimate the set gap for D.
    #[arg(long, value_parser = parse_set, allow_hyphen_values = true)]
    pub set: Option<SetSpec>,
    /// Write the raw (l_sum, b_sum) pairs as CSV to this file.
    #[arg(long, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JointArgs {
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Corrupt every Poisson table the suite builds (self-test of the suite).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("{p} is not in (0, 1)"))
    }
}

fn parse_set(s: &str) -> Result<SetSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn io_failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// Rendered output plus whether the command's checks all held.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

fn resolve_tol(tol: Option<f64>, n: u64, p: f64) -> Result<f64, CliError> {
    let tol = tol.unwrap_or_else(|| default_tolerance(n, p));
    check_tolerance(tol).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(tol)
}

fn with_banner(cli: &Cli, text: String) -> String {
    if cli.no_banner {
        return text;
    }
    match cli.format {
        Some(Format::Json) => text,
        Some(Format::Csv) => format!("# {}\n{text}", banner()),
        None => format!("{}\n{text}", banner()),
    }
}

fn json_version(cli: &Cli) -> Option<String> {
    (!cli.no_banner).then(banner)
}

fn csv_err(e: csv::Error) -> CliError {
    io_failure(e)
}

fn json_err(e: serde_json::Error) -> CliError {
    io_failure(e)
}

/// JSON document emitted by `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub report: BoundReport,
    pub verdicts: Vec<ChainVerdict>,
    pub holds: bool,
}

pub const BOUND_HEADER: [&str; 11] = [
    "n",
    "p",
    "tol",
    "tv_distance",
    "worst_set",
    "worst_set_gap",
    "mismatch_prob",
    "expected_discrepancy",
    "markov_bound",
    "paper_bound",
    "chain_holds",
];

fn cmd_bound(cli: &Cli, args: &PointArgs) -> Result<Outcome, CliError> {
    let tol = resolve_tol(args.tol, args.n, args.p)?;
    let (report, inconsistency) = match bound_report(args.n, args.p, tol) {
        Ok(r) => (r, None),
        Err(Error::Inconsistent { violation, report }) => (*report, Some(violation)),
        Err(e) => return Err(e.into()),
    };
    let verdicts = report.verdicts();
    let holds = inconsistency.is_none() && report.holds();
    let text = match cli.format {
        Some(Format::Json) => to_json(&BoundDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "bound".into(),
            version: json_version(cli),
            report: report.clone(),
            verdicts,
            holds,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &BOUND_HEADER,
            [vec![
                report.n.to_string(),
                machine(report.p),
                machine(report.tol),
                machine(report.tv_distance),
                report.worst_set.to_string(),
                machine(report.worst_set_gap),
                machine(report.mismatch_prob),
                machine(report.expected_discrepancy),
                machine(report.markov_bound),
                machine(report.paper_bound),
                holds.to_string(),
            ]],
        )
        .map_err(csv_err)?,
        None => {
            let mut t = String::new();
            let rows = [
                ("n", report.n.to_string()),
                ("p", human(report.p)),
                ("tol", format!("{:e}", report.tol)),
                ("tv_distance", human(report.tv_distance)),
                ("worst_set", report.worst_set.to_string()),
                ("worst_set_gap", human(report.worst_set_gap)),
                ("mismatch_prob", human(report.mismatch_prob)),
                ("expected_discrepancy", human(report.expected_discrepancy)),
                ("markov_bound", human(report.markov_bound)),
                ("paper_bound", human(report.paper_bound)),
            ];
            for (k, v) in rows {
                t.push_str(&format!("{k:<22}{v}\n"));
            }
            for v in &verdicts {
                let mark = if v.holds { "ok  " } else { "FAIL" };
                t.push_str(&format!("{mark} {}\n", v.relation));
            }
            if let Some(why) = &inconsistency {
                t.push_str(&format!("inconsistent: {why}\n"));
            }
            t
        }
    };
    Ok(Outcome { text, ok: holds })
}

/// JSON document emitted by `tvd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub n: u64,
    pub p: f64,
    pub tol: f64,
    pub tv: f64,
    pub worst_set: SetSpec,
    pub worst_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_gap: Option<f64>,
}

fn cmd_tvd(cli: &Cli, args: &TvdArgs) -> Result<Outcome, CliError> {
    let PointArgs { n, p, tol } = args.point;
    let tol = resolve_tol(tol, n, p)?;
    let tv = tv_distance(n, p, tol)?;
    let (worst_set, worst_gap) = worst_case_set(n, p, tol)?;
    let set_gap = args
        .set
        .as_ref()
        .map(|d| set_gap(n, p, d, tol))
        .transpose()?;
    let text = match cli.format {
        Some(Format::Json) => to_json(&TvdDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "tvd".into(),
            version: json_version(cli),
            n,
            p,
            tol,
            tv,
            worst_set: worst_set.clone(),
            worst_gap,
            set: args.set.clone(),
            set_gap,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &[
                "n",
                "p",
                "tol",
                "tv",
                "worst_set",
                "worst_gap",
                "set",
                "set_gap",
            ],
            [vec![
                n.to_string(),
                machine(p),
                machine(tol),
                machine(tv),
                worst_set.to_string(),
                machine(worst_gap),
                args.set
                    .as_ref()
                    .map(ToString::to_string)
                    .unwrap_or_default(),
                set_gap.map(machine).unwrap_or_default(),
            ]],
        )
        .map_err(csv_err)?,
        None => {
            let mut t = format!(
                "tv_distance  {}\nworst_set    {}\nworst_gap    {}\nnp^2         {}\n",
                human(tv),
                worst_set,
                human(worst_gap),
                human(n as f64 * p * p)
            );
            if let (Some(d), Some(g)) = (&args.set, set_gap) {
                t.push_str(&format!("set          {d}\nset_gap      {}\n", human(g)));
            }
            t
        }
    };
    Ok(Outcome { text, ok: true })
}

/// One row of `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub p: f64,
    pub tv: f64,
    pub mismatch: f64,
    pub e_disc: f64,
    pub np2: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// JSON document emitted by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: [&str; 7] = ["n", "p", "tv", "mismatch", "e_disc", "np2", "ratio"];

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<Outcome, CliError> {
    let mut ns = args.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut ps = args.p.clone();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let grid: Vec<(u64, f64)> = ns
        .iter()
        .flat_map(|&n| ps.iter().map(move |&p| (n, p)))
        .collect();
    let tols = grid
        .iter()
        .map(|&(n, p)| resolve_tol(args.tol, n, p))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = grid
        .par_iter()
        .zip(tols.par_iter())
        .map(|(&(n, p), &tol)| {
            let (report, holds) = match bound_report(n, p, tol) {
                Ok(r) => (r, true),
                Err(Error::Inconsistent { report, .. }) => (*report, false),
                Err(e) => return Err(CliError::from(e)),
            };
            Ok(SweepRow {
                n,
                p,
                tv: report.tv_distance,
                mismatch: report.mismatch_prob,
                e_disc: report.expected_discrepancy,
                np2: report.paper_bound,
                ratio: report.tv_distance / report.paper_bound,
                holds,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ok = rows.iter().all(|r| r.holds);
    let text = match cli.format {
        Some(Format::Json) => to_json(&SweepDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "sweep".into(),
            version: json_version(cli),
            rows,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &SWEEP_HEADER,
            rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    machine(r.p),
                    machine(r.tv),
                    machine(r.mismatch),
                    machine(r.e_disc),
                    machine(r.np2),
                    machine(r.ratio),
                ]
            }),
        )
        .map_err(csv_err)?,
        None => {
            let mut t = format!(
                "{:>6} {:>8} {:>17} {:>17} {:>17} {:>17} {:>13}\n",
                "n", "p", "tv", "mismatch", "e_disc", "np2", "ratio"
            );
            for r in &rows {
                t.push_str(&format!(
                    "{:>6} {:>8} {:>17} {:>17} {:>17} {:>17} {:>13}\n",
                    r.n,
                    r.p,
                    human(r.tv),
                    human(r.mismatch),
                    human(r.e_disc),
                    human(r.np2),
                    human(r.ratio)
                ));
            }
            t
        }
    };
    Ok(Outcome { text, ok })
}

/// JSON document emitted by `sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub n: u64,
    pub p: f64,
    pub estimates: Vec<EstimateSummary>,
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "statistic",
    "mean",
    "std_error",
    "reps",
    "seed",
    "streams",
    "generator",
    "degenerate",
];

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<Outcome, CliError> {
    let streams = match args.streams {
        Some(s) => s,
        None => std::thread::available_parallelism()
            .map_or(1, |n| n.get() as u64)
            .min(args.reps),
    };
    let cfg = SimConfig {
        n: args.n,
        p: args.p,
        reps: args.reps,
        seed: args.seed,
        streams,
    };
    cfg.validate()?;
    if let Some(path) = &args.pairs {
        let pairs = sample_pairs(&cfg)?;
        let csv = to_csv(
            &["l_sum", "b_sum"],
            pairs
                .iter()
                .map(|(l, b)| vec![l.to_string(), b.to_string()]),
        )
        .map_err(csv_err)?;
        fs::write(path, csv).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
    }
    let est = simulate(&cfg, args.set.as_ref())?;
    let mut estimates = vec![est.discrepancy, est.mismatch];
    estimates.extend(est.set_gap);
    let text = match cli.format {
        Some(Format::Json) => to_json(&SampleDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "sample".into(),
            version: json_version(cli),
            n: cfg.n,
            p: cfg.p,
            estimates,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &SUMMARY_HEADER,
            estimates.iter().map(|s| {
                vec![
                    s.statistic.clone(),
                    machine(s.mean),
                    machine(s.std_error),
                    s.reps.to_string(),
                    s.seed.to_string(),
                    s.streams.to_string(),
                    s.generator.clone(),
                    s.degenerate.to_string(),
                ]
            }),
        )
        .map_err(csv_err)?,
        None => {
            let mut t = format!(
                "n={} p={} reps={} seed={} streams={} generator={}\n",
                cfg.n, cfg.p, cfg.reps, cfg.seed, cfg.streams, GENERATOR
            );
            for s in &estimates {
                t.push_str(&format!(
                    "{:<12} mean {}  std_error {}{}\n",
                    s.statistic,
                    human(s.mean),
                    human(s.std_error),
                    if s.degenerate {
                        "  (single sample)"
                    } else {
                        ""
                    }
                ));
            }
            t
        }
    };
    Ok(Outcome { text, ok: true })
}

/// One atom of the joint pmf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAtom {
    pub l: u64,
    pub b: u8,
    pub mass: f64,
}

/// JSON document emitted by `joint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub p: f64,
    pub tol: f64,
    pub truncation_index: u64,
    pub tail_mass: f64,
    pub atoms: Vec<JointAtom>,
}

fn cmd_joint(cli: &Cli, args: &JointArgs) -> Result<Outcome, CliError> {
    check_tolerance(args.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    let joint = joint_pmf(args.p, args.tol)?;
    let atoms: Vec<JointAtom> = joint
        .atoms()
        .map(|((l, b), mass)| JointAtom { l, b, mass })
        .collect();
    let text = match cli.format {
        Some(Format::Json) => to_json(&JointDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "joint".into(),
            version: json_version(cli),
            p: joint.p,
            tol: args.tol,
            truncation_index: joint.truncation_index,
            tail_mass: joint.tail_mass,
            atoms,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &["l", "b", "mass"],
            atoms
                .iter()
                .map(|a| vec![a.l.to_string(), a.b.to_string(), machine(a.mass)]),
        )
        .map_err(csv_err)?,
        None => {
            let mut t = format!("{:>4} {:>2}  mass\n", "l", "b");
            for a in &atoms {
                t.push_str(&format!("{:>4} {:>2}  {}\n", a.l, a.b, human(a.mass)));
            }
            t.push_str(&format!(
                "tail beyond l={}: {:e}\n",
                joint.truncation_index, joint.tail_mass
            ));
            t
        }
    };
    Ok(Outcome { text, ok: true })
}

/// JSON document emitted by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub tol: f64,
    pub passed: bool,
    pub checks: Vec<VerifyCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl From<CheckOutcome> for VerifyCheck {
    fn from(c: CheckOutcome) -> Self {
        Self {
            name: c.name.to_string(),
            passed: c.passed,
            failure: c.failure,
        }
    }
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<Outcome, CliError> {
    let mut verifier = Verifier::new(args.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    if args.inject_fault {
        verifier = verifier.with_fault(Fault::CorruptPoissonTable);
    }
    let checks: Vec<VerifyCheck> = verifier.run().into_iter().map(Into::into).collect();
    let ok = checks.iter().all(|c| c.passed);
    let text = match cli.format {
        Some(Format::Json) => to_json(&VerifyDoc {
            schema_version: SCHEMA_VERSION.into(),
            command: "verify".into(),
            version: json_version(cli),
            tol: args.tol,
            passed: ok,
            checks,
        })
        .map_err(json_err)?,
        Some(Format::Csv) => to_csv(
            &["check", "passed", "detail"],
            checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    c.passed.to_string(),
                    c.failure.clone().unwrap_or_default(),
                ]
            }),
        )
        .map_err(csv_err)?,
        None => {
            let mut t = String::new();
            for c in &checks {
                match &c.failure {
                    None => t.push_str(&format!("PASS {}\n", c.name)),
                    Some(f) => t.push_str(&format!("FAIL {}: {f}\n", c.name)),
                }
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            t.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
            t
        }
    };
    Ok(Outcome { text, ok })
}

/// Runs the parsed command and returns its rendered output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let outcome = match &cli.command {
        Command::Bound(a) => cmd_bound(cli, a)?,
        Command::Tvd(a) => cmd_tvd(cli, a)?,
        Command::Sweep(a) => cmd_sweep(cli, a)?,
        Command::Sample(a) => cmd_sample(cli, a)?,
        Command::Joint(a) => cmd_joint(cli, a)?,
        Command::Verify(a) => cmd_verify(cli, a)?,
    };
    Ok(Outcome {
        text: with_banner(cli, outcome.text),
        ok: outcome.ok,
    })
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_failure(e)),
        _ => Ok(()),
    }
}

/// Parses arguments, runs, writes output and maps the result to an exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|outcome| {
        match &cli.out {
            Some(path) => fs::write(path, &outcome.text)
                .map_err(|e| io_failure(format!("{}: {e}", path.display())))?,
            None => write_stdout(&outcome.text)?,
        }
        Ok(outcome.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
