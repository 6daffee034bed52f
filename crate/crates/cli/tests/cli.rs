use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL: [&str; 8] = [
    "--set",
    "lambda.trials=20000",
    "--set",
    "alpha.trials=2000",
    "--set",
    "hitprob.trials=20000",
    "--trials",
    "3000",
];

fn small_run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "product_strip_halfinterval", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    hitlab(&args)
}

#[test]
fn pmf_prints_a_table() {
    let o = hitlab(&["pmf", "polya-aeppli", "t=1", "theta=0.25", "--k-max", "10"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "k,probability");
    assert_eq!(lines.len(), 12);
    let p0: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((p0 - (-1f64).exp()).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&hitlab(&["pmf", "gauss", "t=1"])), 2);
    assert_eq!(code(&hitlab(&["pmf", "poisson", "t"])), 2);
    assert_eq!(code(&hitlab(&["run", "no_such_preset"])), 2);
    assert_eq!(code(&hitlab(&["run", "parabolic", "--set", "bogus.key=1"])), 2);
    assert_eq!(code(&hitlab(&["frobnicate"])), 2);
    assert_eq!(code(&hitlab(&["run", "parabolic", "--format", "json"])), 2);
    assert_eq!(code(&hitlab(&["list", "--threads", "0"])), 2);
    assert_eq!(code(&hitlab(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--set", "budget.max_steps=10"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let blocked = dir.path().join("file");
    fs::write(&blocked, "x").unwrap();
    let o = hitlab(&["pmf", "poisson", "t=1", "--out", blocked.join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn statistical_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--set", "tolerance.tv=0"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL tv"));
}

#[test]
fn run_writes_all_files_and_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = small_run(a.path(), &["--threads", "1"]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));

    let dist = fs::read_to_string(a.path().join("distributions.csv")).unwrap();
    let rows: Vec<_> = dist.lines().collect();
    assert_eq!(rows[0], "k,empirical,stderr,predicted");
    assert_eq!(rows.len() - 1, 30 + 2);
    assert!(rows.last().unwrap().starts_with("tail,"));
    let est = fs::read_to_string(a.path().join("estimators.csv")).unwrap();
    assert!(est.starts_with("quantity,index,value,stderr,n\n"));
    assert!(fs::read_to_string(a.path().join("summary.txt")).unwrap().contains("result:"));

    // The meta file is itself a config: rerunning from it reproduces the run.
    let meta = a.path().join("meta.txt");
    let o = hitlab(&["run", meta.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--threads", "3"]);
    assert!(code(&o) <= 1);
    for f in ["distributions.csv", "estimators.csv", "summary.txt"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn csv_format_skips_text_files() {
    let dir = tempfile::tempdir().unwrap();
    small_run(dir.path(), &["--format", "csv"]);
    assert!(dir.path().join("distributions.csv").exists());
    assert!(!dir.path().join("summary.txt").exists());
}

#[test]
fn density_tables() {
    let o = hitlab(&["density", "doubling"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "bin_left,bin_right,mass\n0,1,1\n");

    let o = hitlab(&["density", "pm:alpha=0.5", "--bins", "16", "--orbit-length", "200000", "--burn-in", "100"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let masses: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(masses.len(), 16);
    assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    // Mass piles up at the neutral fixed point.
    assert!(masses[0] > masses[15]);

    assert_eq!(code(&hitlab(&["density", "tent"])), 2);
}

#[test]
fn sweep_writes_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "preset=product_strip_halfinterval\nsweep.param=rho\nsweep.values=2^-8,2^-9\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(&SMALL);
    let o = hitlab(&args);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("point_00/distributions.csv").exists());
    assert!(out.join("point_01/meta.txt").exists());

    fs::write(&cfg, "preset=product_strip_halfinterval\nsweep.param=rho\nsweep.values=2^-8\n").unwrap();
    assert_eq!(code(&hitlab(&["sweep", cfg.to_str().unwrap()])), 2);
}

#[test]
fn list_names_presets_and_laws() {
    let o = hitlab(&["list"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["periodic_single", "nonperiodic", "finite_periodic_set", "product_strip", "parabolic", "compound-poisson"] {
        assert!(text.contains(name), "{name}");
    }
}
