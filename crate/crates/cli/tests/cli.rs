use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use htspec::experiments::{run_poisson_experiment, ExperimentConfig};
use htspec::spectral::top_eigs;
use htspec::{sample_matrix, EnsembleSpec, LanczosOptions, Shape, SparseMatrix, SparsitySpec, TailLaw};

fn htspec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htspec"))
        .args(args)
        .current_dir(dir)
        .env_remove("HTSPEC_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_prints_counts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(&["verify", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for check in ["rayleigh lower bound", "interlacing row deletion", "interlacing principal minor", "localized eigenvalue bound"] {
        assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains(check)), "{out}");
    }
    assert!(!out.contains("FAIL"));
}

#[test]
fn sample_is_deterministic_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sample", "--alpha", "2", "--mu", "1", "--rho", "1", "--n", "4", "--seed", "1", "--out"];
    for name in ["a.csv", "b.csv"] {
        let mut a = args.to_vec();
        a.push(name);
        assert_eq!(htspec(&a, dir.path()).status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());

    let spec = EnsembleSpec {
        shape: Shape::Rectangular { n: 4, rho: 1.0 },
        law: TailLaw::pareto(2.0).unwrap(),
        sparsity: SparsitySpec::bernoulli(1.0),
        seed: 1,
    };
    let mut expected = Vec::new();
    sample_matrix(&spec).unwrap().write_csv(&mut expected).unwrap();
    assert_eq!(a, expected);
}

#[test]
fn spectrum_round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(&["sample", "--alpha", "3", "--mu", "0.8", "--n", "60", "--rho", "0.5", "--seed", "4", "--out", "m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = htspec(&["spectrum", "--in", "m.csv", "--topk", "3", "--out", "s.json", "--vectors", "v.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let file = fs::File::open(dir.path().join("m.csv")).unwrap();
    let m = SparseMatrix::read_csv(std::io::BufReader::new(file), None, false).unwrap();
    let lib = top_eigs(&m, 3, &LanczosOptions::default()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    let eigs: Vec<f64> = json["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(eigs, lib.eigenvalues);
    let vectors = fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert_eq!(vectors.lines().next(), Some("v1,v2,v3"));

    let o = htspec(&["spectrum", "--in", "m.csv", "--topk", "3", "--dense"], dir.path());
    let dense: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(dense["solver"], "dense");
    for (a, b) in dense["eigenvalues"].as_array().unwrap().iter().zip(&eigs) {
        assert!((a.as_f64().unwrap() - b).abs() <= 1e-9 * b.abs());
    }
}

#[test]
fn experiment_report_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(
        &["experiment", "poisson", "--alpha", "1", "--n", "60", "--reps", "6", "--seed", "3", "--out", "r.json", "--csv", "r.csv"],
        dir.path(),
    );
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let cfg = ExperimentConfig::covariance(1.0, 1.0, 1.0, 60).unwrap().with_replicates(6).with_seed(3);
    let report = run_poisson_experiment(&cfg).unwrap();
    let written = fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert_eq!(written.trim_end(), report.to_json().unwrap());
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,lambda1,entry1_sq,ratio_entry,ratio_edge,loc_dist,norm_inf,norm_one"));
    assert_eq!(csv.lines().count(), 7);
    let verdict_lines = stdout(&o).lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
    assert_eq!(verdict_lines, report.verdicts.len());
    assert_eq!(o.status.code(), Some(if report.all_pass() { 0 } else { 2 }));
}

#[test]
fn failed_verdicts_exit_two() {
    // With kappa = 0.01 the truncated norm always exceeds its threshold.
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(&["experiment", "truncation", "--alpha", "8", "--n", "64", "--reps", "3", "--kappa", "0.01"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn regime_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(&["experiment", "edge", "--alpha", "1", "--mu", "1", "--n", "50", "--reps", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("regime mismatch"), "{}", stderr(&o));
}

#[test]
fn usage_errors_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["sample", "--n", "3"], "--alpha"),
        (&["sample", "--alpha", "2", "--n", "0"], "--n"),
        (&["experiment", "poisson", "--alpha", "1", "--kappa", "2"], "--kappa"),
        (&["sweep", "--alpha-grid", "3:1:1", "--mu-grid", "1"], "--alpha-grid"),
        (&["experiment", "poisson", "--alpha", "1", "--thresholds", "1,x"], "--thresholds"),
    ];
    for (args, flag) in cases {
        let o = htspec(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
    }
    let o = htspec(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_overlay() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "seed = 5\n[sample]\nalpha = 2\nn = 6\nout = from_config.csv\n").unwrap();
    let o = htspec(&["sample", "--config", "run.conf"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = htspec(&["sample", "--config", "run.conf", "--seed", "5", "--out", "flags.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("from_config.csv")).unwrap(), fs::read(dir.path().join("flags.csv")).unwrap());

    // Flags win over the file.
    let o = htspec(&["sample", "--config", "run.conf", "--seed", "6", "--out", "other.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(fs::read(dir.path().join("from_config.csv")).unwrap(), fs::read(dir.path().join("other.csv")).unwrap());

    fs::write(dir.path().join("bad.conf"), "[sample]\nalpha = 2\nwidth = 3\n").unwrap();
    let o = htspec(&["sample", "--config", "bad.conf", "--n", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("width"));

    fs::write(dir.path().join("section.conf"), "[plot]\nx = 1\n").unwrap();
    let o = htspec(&["verify", "--config", "section.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("plot"));
}

#[test]
fn sweep_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = htspec(&["sweep", "--alpha-grid", "1:5:4", "--mu-grid", "1", "--n", "40", "--reps", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("alpha,mu,threshold,regime,median_ratio_entry,median_ratio_edge,median_loc_dist"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn bad_worker_cap_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_htspec"))
        .args(["sweep", "--alpha-grid", "1", "--mu-grid", "1", "--n", "20", "--reps", "1"])
        .current_dir(dir.path())
        .env("HTSPEC_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("HTSPEC_WORKERS"));
}
