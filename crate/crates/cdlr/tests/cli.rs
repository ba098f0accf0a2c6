use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cdlr::harness::{read_results, write_results};
use cdlr::strategy_io;
use cdlr_core::games::build_kuhn;
use cdlr_core::Player;

fn cdlr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdlr")).args(args).output().expect("running cdlr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, out: &str) -> String {
    let path = dir.join(format!("{out}.cfg"));
    let text = format!(
        "game = kuhn\ncfr_iters = 3, 20\nrandom_seeds = 4\nalgorithms = br, lbr, cdbr:by_round, cdrnr:*:by_round, rnr:*\n\
         p_grid = 0.25, 0.75\niterations = 400\ngv_iterations = 300000\nout = {out}\n"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn coin_demo_prints_every_check() {
    let o = cdlr(&["gadget-demo", "--game", "ce_coin"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.starts_with("ok")));
}

#[test]
fn gadget_demo_rejects_other_games() {
    let o = cdlr(&["gadget-demo", "--game", "kuhn"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gadget_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = cdlr(&["gadget-demo", "--game", "ce_gadget", "--points", "21", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for kind in ["resolving", "max_margin", "trunk_kept"] {
        assert!(out.join(format!("sweep_{kind}.csv")).exists(), "{kind}");
    }
}

#[test]
fn sweeps_are_reproducible_and_pass_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let mut results = Vec::new();
    for name in ["a", "b"] {
        let cfg = write_config(dir.path(), name);
        let o = cdlr(&["sweep", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        results.push(fs::read(dir.path().join(name).join("results.csv")).unwrap());
    }
    assert_eq!(results[0], results[1]);
    let run = dir.path().join("a");
    for file in ["manifest.json", "diagnostics.csv", "timings.csv", "results.dat", "iterations.csv"] {
        assert!(run.join(file).exists(), "{file}");
    }
    // 3 opponents x (3 + 2 + 2) algorithms, plus one average row per algorithm.
    let rows = read_results(&run.join("results.csv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.status != "avg").count(), 21);
    assert!(rows.iter().all(|r| r.status == "ok" || r.status == "avg"));

    let o = cdlr(&["check-bounds", "--run", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // A rerun reuses the cached game value.
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    let o = cdlr(&["sweep", "--config", &write_config(dir.path(), "a")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(run.join("manifest.json")).unwrap(), manifest);
}

#[test]
fn check_bounds_flags_broken_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run");
    assert_eq!(cdlr(&["sweep", "--config", &cfg]).status.code(), Some(0));
    let path = dir.path().join("run").join("results.csv");
    let mut rows = read_results(&path).unwrap();
    let row = rows.iter_mut().find(|r| r.algorithm == "cdrnr:0.25:by_round").unwrap();
    row.exploitability = Some(10.0);
    write_results(&path, &rows).unwrap();
    let o = cdlr(&["check-bounds", "--run", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn solve_writes_readable_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    let o = cdlr(&[
        "solve", "--game", "kuhn", "--algo", "cdrnr", "--opponent", "cfr:10", "--p", "0.5", "--iters", "300",
        "--gv-iters", "300000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("cdrnr:0.5:by_round"));
    let t = build_kuhn();
    strategy_io::read(&out.join("strategy.txt"), &t, Player::Max).unwrap();
    let opponent = out.join("opponent.txt");
    strategy_io::read(&opponent, &t, Player::Min).unwrap();

    // The written opponent can be played against again from its file.
    let again = dir.path().join("again");
    let spec = format!("file:{}", opponent.display());
    let o = cdlr(&["solve", "--game", "kuhn", "--algo", "br", "--opponent", &spec, "--out", again.to_str().unwrap(), "--gv-iters", "300000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn bad_arguments_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cdlr(&["solve", "--game", "kuhn", "--algo", "rnr", "--p", "1", "--opponent", "cfr:2", "--out", out]).status.code(), Some(2));
    assert_eq!(cdlr(&["solve", "--game", "nope", "--algo", "br", "--opponent", "cfr:2", "--out", out]).status.code(), Some(2));
    assert_eq!(cdlr(&["check-bounds", "--run", "/nonexistent"]).status.code(), Some(2));
}
