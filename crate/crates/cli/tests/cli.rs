use std::fs;
use std::process::Command;

fn orgsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orgsim"))
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.conf");
    fs::write(
        &config,
        "# smoke grid\nstrategy = performance_based\na = 0.5\ntau = 5, inf\npattern = small_diag\nruns = 2\nperiods = 20\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = orgsim()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2", "--seed", "9"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * 2 * 20);

    let status = orgsim().args(["report", "--in"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("performance_by_a.csv").exists());
    assert!(out.join("swaps_by_round.csv").exists());
    assert!(out.join("modularity_ecdf.csv").exists());
}

#[test]
fn pattern_prints_matrix_text() {
    let output = orgsim().args(["pattern", "--show", "small_reciprocal"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    let parsed = orgsim::InfluenceMatrix::parse(&text).unwrap();
    assert_eq!(parsed.n(), 15);
    assert_eq!(parsed.uniform_k(), Some(6));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(&config, "colour = blue\n").unwrap();
    let status = orgsim().args(["run", "--config"]).arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let status = orgsim().args(["pattern", "--show", "spiral"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let status = orgsim().args(["run"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let status = orgsim().args(["report", "--in"]).arg(dir.path().join("missing")).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // output path blocked by a regular file
    let config = dir.path().join("grid.conf");
    fs::write(&config, "runs = 1\nperiods = 5\na = 0.5\ntau = inf\npattern = small_diag\nstrategy = performance_based\n").unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let status = orgsim()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(blocker.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
