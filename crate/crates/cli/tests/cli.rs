use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crystalchain::hamiltonian::{build_model, evaluate, CouplingValues};
use crystalchain_oracles::quadrature_average;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crystalchain")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

fn p_avg_column(csv_text: &str) -> Vec<f64> {
    csv_text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
}

#[test]
fn basis_listing() {
    let n3 = stdout(&["basis", "--n", "3"]);
    let lines: Vec<&str> = n3.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0], "1 RYY J3=-1/2; J^2..J^N=0/2,1/2");
    let n2 = stdout(&["basis", "--n", "2"]);
    let words: Vec<&str> = n2.lines().map(|l| l.split(' ').nth(1).unwrap()).collect();
    assert_eq!(words, ["RY", "YY", "YR", "RR"]);
}

#[test]
fn argument_errors_exit_2() {
    assert_eq!(code(&["basis", "--n", "1"]), 2);
    assert_eq!(code(&["basis", "--n", "15"]), 2);
    assert_eq!(code(&["basis"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["profile", "--n", "3"]), 2);
    assert_eq!(code(&["profile", "--n", "3", "--initial", "RRYY"]), 2);
    assert_eq!(code(&["profile", "--n", "3", "--initial", "RXY"]), 2);
    assert_eq!(code(&["profile", "--n", "3", "--initial", "RRY", "--horizon", "-2"]), 2);
    assert_eq!(code(&["profile", "--n", "3", "--initial", "RRY", "--eps", "inf"]), 2);
    assert_eq!(code(&["hamiltonian", "--n", "3", "--model", "potts"]), 2);
    assert_eq!(code(&["profile", "--config", "/nonexistent/run.json", "--n", "3", "--initial", "RRY"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn horizon_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    assert_eq!(code(&["reproduce", "fig2", "--max-horizon", "100", "--out", out.to_str().unwrap()]), 3);
}

#[test]
fn underdetermined_fit_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ranked.csv");
    fs::write(&input, "rank,value\n1,0.5\n2,0.25\n3,0\n4,0\n").unwrap();
    assert_eq!(code(&["fit", "--input", input.to_str().unwrap(), "--model", "yule"]), 4);
}

#[test]
fn symbolic_dumps() {
    let crystal = stdout(&["hamiltonian", "--n", "3", "--model", "crystal", "--symbolic"]);
    assert!(!crystal.contains("ETA"));
    assert!(crystal.lines().all(|l| l.split(' ').count() == 4));
    let hamming = stdout(&["hamiltonian", "--n", "3", "--model", "hamming", "--symbolic"]);
    assert_eq!(hamming.lines().filter(|l| l.contains(" BETA ")).count(), 24);
    let n4 = stdout(&["hamiltonian", "--n", "4", "--symbolic"]);
    assert!(n4.lines().any(|l| l.contains(" ETA ")));
}

#[test]
fn numeric_matrix_matches_library() {
    let text = stdout(&["hamiltonian", "--n", "3", "--eps", "0.1", "--gamma", "0.3", "--delta", "0.3"]);
    let h = evaluate(&build_model(3).unwrap(), &CouplingValues { mu0: 1.0, eps: 0.1, gamma: 0.3, delta: 0.3, ..Default::default() });
    let rows: Vec<Vec<f64>> = text.lines().map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert_eq!(v, h[(r, c)]);
        }
    }
}

#[test]
fn short_horizon_is_delta_row() {
    let text = stdout(&["profile", "--n", "3", "--initial", "RYY", "--horizon", "0.000001"]);
    let p = p_avg_column(&text);
    assert!((p[0] - 1.0).abs() < 1e-9);
    assert!(p[1..].iter().all(|&v| v < 1e-9));
}

#[test]
fn profile_matches_quadrature() {
    let values = CouplingValues { mu0: 1.0, eps: 0.1, gamma: 0.3, delta: 0.3, ..Default::default() };
    let h = evaluate(&build_model(3).unwrap(), &values);
    let text = stdout(&["profile", "--n", "3", "--initial", "RRY", "--eps", "0.1", "--gamma", "0.3", "--delta", "0.3", "--horizon", "7.5"]);
    let got = p_avg_column(&text);
    let want = quadrature_average(&h, 3, 7.5, 100_000);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-6, "{g} vs {w}");
    }
}

#[test]
fn fig1_groups_by_hamming_distance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1");
    stdout(&["reproduce", "fig1", "--out", out.to_str().unwrap()]);
    let report = json(out.join("plateaux.json"));
    assert_eq!(report["ordering_consistent"], Value::Bool(true));
    let sizes: Vec<u64> = report["groups"].as_array().unwrap().iter().map(|g| g["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [1, 3, 3, 1]);
}

#[test]
fn reproduce_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    stdout(&["reproduce", "fig2", "--out", a.to_str().unwrap()]);
    stdout(&["reproduce", "fig2", "--out", b.to_str().unwrap()]);
    for name in ["profile.csv", "ranked.csv", "fits.json", "plateaux.json", "plot.txt"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name}");
    }
    let strip = |v: Value| {
        let mut v = v;
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    assert_eq!(strip(json(a.join("manifest.json"))), strip(json(b.join("manifest.json"))));

    let ranked = read(a.join("ranked.csv"));
    let values = p_avg_column(&ranked);
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    let plot = read(a.join("plot.txt"));
    assert_eq!(plot.lines().count(), 8);
    assert!(plot.lines().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn manifest_reproduces_profile() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    stdout(&[
        "profile", "--n", "4", "--initial", "YYRY", "--eps", "0.1", "--gamma", "0.5", "--delta", "0.5", "--eta", "0.5",
        "--include-self", "--out", first.to_str().unwrap(),
    ]);
    let manifest = json(first.join("manifest.json"));
    for key in ["n", "initial", "model", "couplings", "horizon", "resolved_T", "include_self", "fits", "version", "timestamp"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    for key in ["mu0", "eps", "gamma", "delta", "eta", "beta"] {
        assert!(manifest["couplings"].get(key).is_some());
    }
    let cfg = first.join("manifest.json");
    stdout(&["profile", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(read(first.join("profile.csv")), read(second.join("profile.csv")));
    assert_eq!(read(first.join("ranked.csv")), read(second.join("ranked.csv")));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"n": 3, "initial": "RRY", "couplings": {"eps": 0.1, "gamma": 0.3, "delta": 0.3}, "horizon": "infinite"}"#).unwrap();
    let from_file = stdout(&["profile", "--config", cfg.to_str().unwrap()]);
    let from_flags = stdout(&["profile", "--n", "3", "--initial", "RRY", "--eps", "0.1", "--gamma", "0.3", "--delta", "0.3", "--horizon", "infinite"]);
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&["profile", "--config", cfg.to_str().unwrap(), "--gamma", "0.5"]);
    assert_ne!(overridden, from_file);
}

fn write_ranked(path: &Path, values: &[f64]) {
    let mut text = String::from("rank,index,word,value\n");
    for (r, v) in values.iter().enumerate() {
        text += &format!("{},{},-,{v:?}\n", r + 1, r + 1);
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_synthetic_yule() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ranked.csv");
    let (a, k, b): (f64, f64, f64) = (1.96, -1.49, 0.24);
    let values: Vec<f64> = (1..=8).map(|r| a * (r as f64).powf(k) * b.powi(r)).collect();
    write_ranked(&input, &values);
    let out: Value = serde_json::from_str(&stdout(&["fit", "--input", input.to_str().unwrap(), "--model", "yule"])).unwrap();
    let fit = &out["fits"][0];
    assert_eq!(fit["model"], "yule");
    assert!((fit["a"].as_f64().unwrap() - a).abs() <= 1e-6);
    assert!((fit["k"].as_f64().unwrap() - k).abs() <= 1e-6);
    assert!((fit["b"].as_f64().unwrap() - b).abs() <= 1e-6);
    for key in ["sse_log", "sse_linear", "r2", "points_used", "points_excluded"] {
        assert!(fit.get(key).is_some(), "fit lacks {key}");
    }
    let both: Value = serde_json::from_str(&stdout(&["fit", "--input", input.to_str().unwrap(), "--refine"])).unwrap();
    assert_eq!(both["fits"].as_array().unwrap().len(), 2);
    assert_eq!(both["fits"][1]["model"], "zipf");
    assert_eq!(both["fits"][0]["fit_space"], "linear");
}

#[test]
fn fit_constant_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    write_ranked(&input, &[0.125; 8]);
    let out: Value = serde_json::from_str(&stdout(&["fit", "--input", input.to_str().unwrap(), "--model", "yule"])).unwrap();
    assert!(out["fits"][0]["k"].as_f64().unwrap().abs() < 1e-9);
    assert!((out["fits"][0]["b"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn fit_on_fig4_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4");
    stdout(&["reproduce", "fig4", "--out", out.to_str().unwrap()]);
    let ranked = out.join("ranked.csv");
    let fit: Value = serde_json::from_str(&stdout(&["fit", "--input", ranked.to_str().unwrap(), "--model", "yule"])).unwrap();
    let k = fit["fits"][0]["k"].as_f64().unwrap();
    let b = fit["fits"][0]["b"].as_f64().unwrap();
    assert!(k < 0.0, "k = {k}");
    assert!(b > 0.0 && b <= 1.0, "b = {b}");
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    assert_eq!(code(&["sweep", "--n", "3", "--initial", "RRY", "--out", out.to_str().unwrap()]), 0);
    assert_eq!(read(out.join("summary.csv")).lines().count(), 1);
}

#[test]
fn two_point_sweep_is_reproducible_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    stdout(&[
        "sweep", "--n", "3", "--initial", "RRY", "--include-self", "--grid", "eps+gamma+delta=0.3,0.5", "--workers", "2",
        "--out", out.to_str().unwrap(),
    ]);
    let summary = read(out.join("summary.csv"));
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",ok,")));
    for point in ["point-0001", "point-0002"] {
        let rerun = dir.path().join(format!("rerun-{point}"));
        let cfg = out.join(point).join("manifest.json");
        stdout(&["profile", "--config", cfg.to_str().unwrap(), "--out", rerun.to_str().unwrap()]);
        assert_eq!(read(out.join(point).join("profile.csv")), read(rerun.join("profile.csv")));
    }
    let m1 = json(out.join("point-0001/manifest.json"));
    assert_eq!(m1["couplings"]["gamma"].as_f64(), Some(0.3));
}

#[test]
fn sweep_records_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mixed");
    // Uncoupled chains settle at once; the 0.3 point needs T > 100.
    let args = ["sweep", "--n", "3", "--initial", "RRY", "--max-horizon", "100", "--out"];
    let mixed = [&args[..], &[out.to_str().unwrap(), "--grid", "eps+gamma+delta=0,0.3"]].concat();
    assert_eq!(code(&mixed), 0);
    let summary = read(out.join("summary.csv"));
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",ok,"));
    assert!(rows[1].contains("error (exit 3)"));

    let failed = dir.path().join("failed");
    let all_bad = [&args[..], &[failed.to_str().unwrap(), "--grid", "eps+gamma+delta=0.3"]].concat();
    assert_eq!(code(&all_bad), 3);
    assert_eq!(read(failed.join("summary.csv")).lines().count(), 2);
}
