use std::fs;
use std::path::Path;
use std::process::Command;

use escape_core::cli::{main_with_args, RunManifest};
use serde_json::Value;

const BROWNIAN: &str = "\
drift.kind = zero
diffusion.kind = constant
diffusion.params = 1
epsilon = 0.01
alpha = 1.5
measure.kind = full
domain.a = -1
domain.b = 1
target = right
";

const OU: &str = "\
drift.kind = linear_ou
diffusion.kind = zero
epsilon = 0.1
alpha = 1.5
measure.kind = truncated
measure.kappa = 1
domain.a = -1
domain.b = 1
target = right
";

const TUMOR: &str = "\
drift.kind = tumor
drift.params = 0.1, 1.2
diffusion.kind = zero
epsilon = 0.05
alpha = 1.5
measure.kind = full
domain.a = 0
domain.b = 8.772001872658764
target = left
";

fn problem(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("escape").chain(args.iter().copied()))
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn metadata(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("metadata.json")).unwrap()).unwrap()
}

#[test]
fn solve_without_jumps_is_symmetric() {
    let d = tempfile::tempdir().unwrap();
    let prob = problem(d.path(), "bm.conf", BROWNIAN);
    let out = d.path().join("solve");
    assert_eq!(run(&["solve", "--problem", &prob, "--out", out.to_str().unwrap(), "--eps", "0"]), 0);
    let r = rows(&out.join("solution.csv"));
    assert_eq!(r.len(), 403);
    let mid = r.iter().find(|row| row[0] == 0.0).unwrap();
    assert!((mid[1] - 0.5).abs() < 1e-10);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.subcommand, "solve");
    assert_eq!(m.outputs, vec!["solution.csv".to_string()]);
    assert!(m.problem.contains("epsilon = 0\n"));
    let again: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(again, m);
}

#[test]
fn malformed_problem_exits_with_configuration_code() {
    let d = tempfile::tempdir().unwrap();
    let prob = problem(d.path(), "bad.conf", "drift.kind = zero\nthis line is wrong\n");
    let out = d.path().join("o");
    let bin = env!("CARGO_BIN_EXE_escape");
    let res = Command::new(bin).args(["solve", "--problem", &prob, "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
    let res = Command::new(bin).args(["solve", "--out", "x"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    let prob = problem(d.path(), "bm.conf", BROWNIAN);
    assert_eq!(run(&["solve", "--problem", &prob, "--out", out.to_str().unwrap(), "--alpha", "2.5"]), 2);
    assert_eq!(run(&["mc", "--problem", &prob, "--out", out.to_str().unwrap(), "--x0", "1.5"]), 2);
}

#[test]
fn solve_output_feeds_compare() {
    let d = tempfile::tempdir().unwrap();
    let prob = problem(d.path(), "bm.conf", BROWNIAN);
    let s = d.path().join("s");
    let c = d.path().join("c");
    assert_eq!(run(&["solve", "--problem", &prob, "--out", s.to_str().unwrap(), "--grid-n", "101"]), 0);
    let csv = s.join("solution.csv");
    assert_eq!(run(&["compare", "--problem", &prob, "--out", c.to_str().unwrap(), "--numerical", csv.to_str().unwrap()]), 0);
    let r = rows(&c.join("compare.csv"));
    assert_eq!(r.len(), 101);
    let solved = rows(&csv);
    for (row, num) in r.iter().zip(&solved[1..]) {
        assert_eq!(row[2], num[0]);
        assert_eq!(row[3], num[1]);
        assert_eq!(row[5], (row[3] - row[4]).abs());
    }
    let summary = rows(&c.join("compare_summary.csv"));
    assert_eq!(summary.len(), 1);
    assert!(summary[0][2] < 2e-3);
}

#[test]
fn compare_sweep_is_long_format() {
    let d = tempfile::tempdir().unwrap();
    let prob = problem(d.path(), "bm.conf", BROWNIAN);
    let c = d.path().join("c");
    let args = ["compare", "--problem", &prob, "--out", c.to_str().unwrap(), "--alpha", "0.5,1.5", "--eps", "0.001,0.01", "--grid-n", "51"];
    assert_eq!(run(&args), 0);
    let r = rows(&c.join("compare.csv"));
    assert_eq!(r.len(), 4 * 51);
    let summary = rows(&c.join("compare_summary.csv"));
    let keys: Vec<(f64, f64)> = summary.iter().map(|s| (s[0], s[1])).collect();
    assert_eq!(keys, vec![(0.5, 0.001), (0.5, 0.01), (1.5, 0.001), (1.5, 0.01)]);
    let first = fs::read(c.join("compare.csv")).unwrap();
    assert_eq!(run(&args), 0);
    assert_eq!(fs::read(c.join("compare.csv")).unwrap(), first);
}

#[test]
fn asym_metadata_for_each_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let ou = problem(d.path(), "ou.conf", OU);
    let o = d.path().join("ou");
    assert_eq!(run(&["asym", "--problem", &ou, "--out", o.to_str().unwrap(), "--grid-n", "41"]), 0);
    let m = metadata(&o);
    assert_eq!(m["case"], "Case4");
    assert!((m["beta"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(m["gamma"].as_f64().unwrap() > 0.0);
    assert!((m["constant"].as_f64().unwrap() - 0.5).abs() < 0.02);
    assert_eq!(m["measure"]["kind"], "truncated");
    assert_eq!(m["layer_measure"]["kind"], "truncated");

    let bm = problem(d.path(), "bm.conf", BROWNIAN);
    let b = d.path().join("bm");
    assert_eq!(run(&["asym", "--problem", &bm, "--out", b.to_str().unwrap(), "--grid-n", "21"]), 0);
    assert_eq!(metadata(&b)["case"], "regular");

    let tumor = problem(d.path(), "tumor.conf", TUMOR);
    let t = d.path().join("tumor");
    assert_eq!(run(&["asym", "--problem", &tumor, "--out", t.to_str().unwrap(), "--grid-n", "41"]), 0);
    let m = metadata(&t);
    assert_eq!(m["case"], "Case3");
    let (_, x2, _) = escape_core::model::tumor_equilibria(0.1, 1.2).unwrap();
    assert!((m["x_bar"].as_f64().unwrap() - x2).abs() < 1e-3);
}

#[test]
fn mc_rows_and_reruns() {
    let d = tempfile::tempdir().unwrap();
    let prob = problem(d.path(), "bm.conf", BROWNIAN);
    let a = d.path().join("a");
    let b = d.path().join("b");
    for out in [&a, &b] {
        let args = ["mc", "--problem", &prob, "--out", out.to_str().unwrap(), "--x0", "-0.5,0,0.5", "--paths", "1000", "--seed", "5", "--traces", "1"];
        assert_eq!(run(&args), 0);
    }
    let ra = fs::read(a.join("mc.csv")).unwrap();
    assert_eq!(ra, fs::read(b.join("mc.csv")).unwrap());
    let r = rows(&a.join("mc.csv"));
    assert_eq!(r.len(), 3);
    for row in &r {
        assert!((0.0..=1.0).contains(&row[1]));
    }
    assert!(a.join("traces/x0_2_path_0.csv").exists());
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, Some(5));
}
