use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn histlearn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histlearn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn histlearn")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = histlearn(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    histlearn(dir, args).status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Dataset plus labeled training and test workloads in `dir`.
fn workload(dir: &Path, seed: &str) {
    ok(dir, &["gen-data", "--preset", "type1", "--r", "512", "--records", "20000", "--seed", seed, "--out", "d.csv"]);
    ok(dir, &["gen-queries", "--data", "d.csv", "--count", "150", "--seed", "1", "--out", "q.csv"]);
    ok(dir, &["gen-queries", "--data", "d.csv", "--count", "500", "--seed", "2", "--out", "t.csv"]);
    ok(dir, &["label", "--data", "d.csv", "--queries", "q.csv", "--out", "train.csv"]);
    ok(dir, &["label", "--data", "d.csv", "--queries", "t.csv", "--out", "test.csv"]);
}

fn error_pct(stdout: &str) -> f64 {
    stdout.trim().parse().expect("numeric error")
}

#[test]
fn pipeline_trains_and_evaluates_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    workload(d, "7");
    ok(d, &["train", "--method", "sphist", "--buckets", "20", "--qfrs", "train.csv", "--out", "h.csv", "--sketch-out", "sk.csv"]);
    ok(d, &["train", "--method", "equihist", "--buckets", "20", "--qfrs", "train.csv", "--out", "e.csv"]);
    ok(d, &["train", "--method", "online-equihist", "--buckets", "20", "--qfrs", "train.csv", "--out", "o.csv"]);
    let sp = error_pct(&ok(d, &["evaluate", "--hist", "h.csv", "--qfrs", "test.csv"]));
    let sk = error_pct(&ok(d, &["evaluate", "--sketch", "sk.csv", "--qfrs", "test.csv"]));
    let eq = error_pct(&ok(d, &["evaluate", "--hist", "e.csv", "--qfrs", "test.csv"]));
    let on = error_pct(&ok(d, &["evaluate", "--hist", "o.csv", "--qfrs", "test.csv"]));
    for e in [sp, sk, eq, on] {
        assert!(e.is_finite() && e >= 0.0 && e < 100.0, "{e}");
    }
    assert!((eq - on).abs() < 0.5, "batch {eq} vs online {on}");
    assert!(read(d, "h.csv").lines().count() <= 21);
}

#[test]
fn estimate_writes_readable_qfrs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    workload(d, "3");
    ok(d, &["train", "--method", "equihist", "--buckets", "16", "--qfrs", "train.csv", "--out", "h.csv"]);
    let printed = ok(d, &["estimate", "--hist", "h.csv", "--queries", "t.csv"]);
    ok(d, &["estimate", "--hist", "h.csv", "--queries", "t.csv", "--out", "est.csv"]);
    assert_eq!(printed, read(d, "est.csv"));
    assert_eq!(printed.lines().count(), 501);
    // Evaluating a model against its own estimates is exact.
    let self_err = error_pct(&ok(d, &["evaluate", "--hist", "h.csv", "--qfrs", "est.csv"]));
    assert_eq!(self_err, 0.0);
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        workload(d, "11");
        ok(d, &["train", "--method", "sphist", "--buckets", "12", "--qfrs", "train.csv", "--out", "h.csv", "--sketch-out", "sk.csv"]);
        ["d.csv", "q.csv", "train.csv", "test.csv", "h.csv", "sk.csv"].map(|f| read(d, f))
    };
    assert_eq!(run(), run());
}

#[test]
fn multi_dimensional_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--preset", "gauss-nd", "--r", "16", "--dims", "2", "--records", "5000", "--out", "d.csv"]);
    ok(d, &["gen-queries", "--data", "d.csv", "--count", "100", "--model", "data-dependent", "--out", "q.csv"]);
    ok(d, &["label", "--data", "d.csv", "--queries", "q.csv", "--out", "train.csv"]);
    ok(d, &["train", "--method", "equihist", "--buckets", "16", "--per-dim", "4,4", "--qfrs", "train.csv", "--out", "e.csv"]);
    ok(d, &["train", "--method", "sphist", "--buckets", "16", "--qfrs", "train.csv", "--out", "s.csv"]);
    assert!(read(d, "e.csv").starts_with("# dims=2 domain=16,16"));
    assert_eq!(read(d, "e.csv").lines().count(), 17);
    error_pct(&ok(d, &["evaluate", "--hist", "s.csv", "--qfrs", "train.csv"]));
}

#[test]
fn online_sim_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    workload(d, "5");
    let args = [
        "online-sim", "--data", "d.csv", "--stream", "q.csv", "--test", "t.csv", "--buckets", "10", "--decay",
        "0.99", "--eval-every", "50", "--perturb-at", "100", "--seed", "2", "--out", "traj.csv",
    ];
    ok(d, &args);
    let text = read(d, "traj.csv");
    let steps: Vec<usize> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("step,avg_rel_error"));
    assert_eq!(steps, vec![50, 100, 100, 150]);
    ok(d, &args);
    assert_eq!(text, read(d, "traj.csv"));
}

fn experiment(d: &Path) -> PathBuf {
    let p = d.join("exp.cfg");
    std::fs::write(
        &p,
        "# small sweep\ndomain=256\nrecords=20000\nseeds=0..3\nsweep=buckets\nvalues=5,10\ntest_size=300\n",
    )
    .unwrap();
    p
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    experiment(d);
    ok(d, &["sweep", "--experiment", "exp.cfg", "--seed", "1", "--jobs", "1", "--out", "a.csv"]);
    ok(d, &["sweep", "--experiment", "exp.cfg", "--seed", "1", "--jobs", "3", "--out", "b.csv", "--plot", "b.plot"]);
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert!(read(d, "a.gp").contains("\"a.csv\""));
    assert!(d.join("b.plot").is_file());
    let rows: Vec<String> = read(d, "a.csv").lines().map(String::from).collect();
    assert_eq!(rows[0], "method,sweep_var,sweep_value,mean_err_pct,std_err_pct,seeds,wall_ms");
    assert_eq!(rows.len(), 5);
    ok(d, &["sweep", "--experiment", "exp.cfg", "--seed", "2", "--out", "c.csv"]);
    assert_ne!(read(d, "a.csv"), read(d, "c.csv"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    workload(d, "2");
    std::fs::write(d.join("run.cfg"), "method=equihist\nbuckets=8\nqfrs=train.csv\ncount=10\n").unwrap();
    ok(d, &["--config", "run.cfg", "train", "--out", "a.csv"]);
    assert_eq!(read(d, "a.csv").lines().count(), 9);
    ok(d, &["train", "--config", "run.cfg", "--buckets", "4", "--out", "b.csv"]);
    assert_eq!(read(d, "b.csv").lines().count(), 5);
    std::fs::write(d.join("bad.cfg"), "bukets=8\n").unwrap();
    assert_eq!(code(d, &["--config", "bad.cfg", "train", "--out", "c.csv"]), 1);
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["--version"]), 0);
    assert_eq!(code(d, &[]), 1);
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["gen-data", "--out", "d.csv", "--bogus"]), 1);
    assert_eq!(code(d, &["evaluate", "--hist", "missing.csv", "--qfrs", "x.csv"]), 1);
    assert_eq!(code(d, &["gen-data", "--records", "10", "--r", "64", "--out", "no/such/dir.csv"]), 1);
    experiment(d);
    let missing_seed = histlearn(d, &["sweep", "--experiment", "exp.cfg", "--out", "r.csv"]);
    assert_eq!(missing_seed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing_seed.stderr).contains("Usage"));

    std::fs::write(d.join("garbage.csv"), "1,2,3\n").unwrap();
    std::fs::write(d.join("x.csv"), "# dims=1 domain=8\n1,8,3\n").unwrap();
    assert_eq!(code(d, &["evaluate", "--hist", "garbage.csv", "--qfrs", "x.csv"]), 2);
    std::fs::write(d.join("h.csv"), "# dims=1 domain=16\n1,16,5\n").unwrap();
    assert_eq!(code(d, &["evaluate", "--hist", "h.csv", "--qfrs", "x.csv"]), 2);
    assert_eq!(code(d, &["gen-data", "--records", "0", "--r", "64", "--out", "z.csv"]), 2);
}

#[test]
fn cell_limit_env_guards_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_histlearn"))
        .current_dir(dir.path())
        .env("HISTLEARN_CELL_LIMIT", "100")
        .args(["gen-data", "--r", "1024", "--records", "10", "--out", "d.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("d.csv").exists());
}
