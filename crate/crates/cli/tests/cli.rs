use std::process::{Command, Output};

use poisson_couple_cli::{
    BoundDoc, JointDoc, SampleDoc, SweepDoc, TvdDoc, VerifyDoc, SWEEP_HEADER,
};

const BIN: &str = env!("CARGO_BIN_EXE_poisson-couple");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("POISSON_COUPLE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bound_exits_zero_and_reports_chain() {
    let out = run(&["bound", "--n", "10", "--p", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("poisson-couple "));
    assert!(text.contains("paper_bound"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["bound", "--n", "0", "--p", "0.1"][..],
        &["bound", "--n", "3", "--p", "1.5"],
        &["bound", "--n", "3"],
        &["tvd", "--n", "3", "--p", "0.1", "--set", "a..b"],
        &[
            "sample",
            "--n",
            "2",
            "--p",
            "0.1",
            "--reps",
            "3",
            "--streams",
            "4",
        ],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn infeasible_tolerance_is_reported() {
    let out = run(&["verify", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance infeasible"));
}

#[test]
fn unwritable_output_exits_one() {
    let out = run(&[
        "--out",
        "/nonexistent-dir/x.csv",
        "bound",
        "--n",
        "2",
        "--p",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bound_json_round_trips() {
    let out = run(&["--format", "json", "bound", "--n", "20", "--p", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let doc: BoundDoc = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.schema_version, "1");
    assert_eq!(doc.command, "bound");
    assert!(doc.holds);
    assert!((doc.report.paper_bound - 0.05).abs() < 1e-15);
    let again = poisson_couple_cli::render::to_json(&doc).unwrap();
    assert_eq!(again, text);
}

#[test]
fn json_without_banner_omits_version() {
    let out = run(&["--format", "json", "--no-banner", "joint", "--p", "0.2"]);
    let doc: JointDoc = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc.version.is_none());
    let total: f64 = doc.atoms.iter().map(|a| a.mass).sum::<f64>() + doc.tail_mass;
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn tvd_reports_set_gap_and_complement_symmetry() {
    let a = run(&[
        "--format", "json", "tvd", "--n", "5", "--p", "0.2", "--set", "0,1",
    ]);
    let b = run(&[
        "--format", "json", "tvd", "--n", "5", "--p", "0.2", "--set", "!0,1",
    ]);
    let a: TvdDoc = serde_json::from_str(&stdout(&a)).unwrap();
    let b: TvdDoc = serde_json::from_str(&stdout(&b)).unwrap();
    assert!((a.set_gap.unwrap() - b.set_gap.unwrap()).abs() < 1e-12);
    assert!(a.set_gap.unwrap() <= a.tv + 1e-12);
    assert!((a.worst_gap - a.tv).abs() < 1e-10);
}

#[test]
fn sweep_csv_has_full_grid_sorted() {
    let out = run(&["--format", "csv", "--no-banner", "sweep"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, SWEEP_HEADER);
    let rows: Vec<(u64, f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (
                r[0].parse().unwrap(),
                r[1].parse().unwrap(),
                r[6].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 30);
    for w in rows.windows(2) {
        assert!((w[0].0, w[0].1) < (w[1].0, w[1].1));
    }
    assert!(rows
        .iter()
        .all(|&(_, _, ratio)| (0.0..=1.0).contains(&ratio)));
}

#[test]
fn csv_banner_is_a_comment_line() {
    let out = run(&["--format", "csv", "sweep", "--n", "2", "--p", "0.1"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# poisson-couple "));
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
}

#[test]
fn sweep_json_round_trips() {
    let out = run(&["--format", "json", "sweep", "--n", "3,1", "--p", "0.3,0.01"]);
    let doc: SweepDoc = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<(u64, f64)> = doc.rows.iter().map(|r| (r.n, r.p)).collect();
    assert_eq!(keys, [(1, 0.01), (1, 0.3), (3, 0.01), (3, 0.3)]);
}

#[test]
fn sample_with_few_reps() {
    let out = run(&[
        "--format", "json", "sample", "--n", "3", "--p", "0.1", "--reps", "5", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: SampleDoc = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.estimates.len(), 2);
    for e in &doc.estimates {
        assert_eq!(e.reps, 5);
        assert!(e.std_error >= 0.0);
        assert!((0.0..=3.0).contains(&e.mean));
    }
}

#[test]
fn single_rep_is_flagged_degenerate() {
    let out = run(&[
        "--format", "json", "sample", "--n", "3", "--p", "0.1", "--reps", "1",
    ]);
    let doc: SampleDoc = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc
        .estimates
        .iter()
        .all(|e| e.degenerate && e.std_error == 0.0));
}

#[test]
fn sample_is_deterministic_and_seed_env_is_honoured() {
    let args = [
        "sample",
        "--n",
        "5",
        "--p",
        "0.2",
        "--reps",
        "1000",
        "--streams",
        "4",
    ];
    let explicit = run(&[&args[..], &["--seed", "42"]].concat());
    let from_env = Command::new(BIN)
        .args(args)
        .env("POISSON_COUPLE_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(explicit.stdout, from_env.stdout);
    let other = run(&[&args[..], &["--seed", "43"]].concat());
    assert_ne!(explicit.stdout, other.stdout);
}

#[test]
fn pairs_file_respects_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.csv");
    let out = run(&[
        "sample",
        "--n",
        "1",
        "--p",
        "0.3",
        "--reps",
        "2000",
        "--seed",
        "7",
        "--streams",
        "3",
        "--pairs",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["l_sum", "b_sum"]);
    let pairs: Vec<(u64, u64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(pairs.len(), 2000);
    for (l, b) in pairs {
        assert!(b <= 1);
        if b == 0 {
            assert_eq!(l, 0);
        }
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("joint.csv");
    let out = run(&[
        "--format",
        "csv",
        "--no-banner",
        "--out",
        path.to_str().unwrap(),
        "joint",
        "--p",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("l,b,mass\n0,0,5.0000000000000000e-1\n"));
}

#[test]
fn verify_json_lists_checks() {
    let out = run(&["--format", "json", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: VerifyDoc = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc.passed);
    assert!(doc.checks.len() >= 10);
}

#[test]
fn verify_fault_names_failing_check() {
    let out = run(&["--format", "csv", "--no-banner", "verify", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("check,passed,detail\n"));
    assert!(text.lines().any(|l| l.contains(",false,")));
}
