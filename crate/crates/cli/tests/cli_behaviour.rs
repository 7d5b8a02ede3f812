use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use superbergman_cli::presets::Preset;

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_superbergman"));
    cmd.env_remove("SUPERBERGMAN_THREADS").env_remove("SUPERBERGMAN_VERBOSITY");
    cmd
}

fn run(args: &[&str]) -> (i32, String) {
    let out = binary().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn constant_symbol_table_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let (code, _) = run(&[
        "gamma", "--case", "quasi-elliptic", "--p", "1", "--q", "1", "--nu", "2", "--symbol", "one", "--nmax", "8",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = json(&out);
    let entries = report["table"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 18);
    for e in entries {
        assert!((e["value"].as_f64().unwrap() - 1.0).abs() <= 1e-14);
    }
    assert_eq!(report["config"]["symbol"], "one");
}

#[test]
fn parabolic_exponential_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let (code, _) = run(&[
        "gamma", "--case", "quasi-parabolic", "--p", "1", "--q", "0", "--nu", "3", "--symbol", "parabolic:exp",
        "--xi", "0.5,1,2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for e in json(&out)["table"]["entries"].as_array().unwrap() {
        let xi = e["xi"].as_f64().unwrap();
        let expected = (2.0 * xi / (2.0 * xi + 1.0)).powi(2);
        assert!((e["value"].as_f64().unwrap() - expected).abs() <= 1e-12);
    }
}

#[test]
fn configuration_errors_exit_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let target = out.to_str().unwrap();
    for args in [
        vec!["gamma", "--symbol", "parabolic:exp:-1", "--case", "quasi-parabolic", "--out", target],
        vec!["gamma", "--symbol", "nonsense", "--out", target],
        vec!["gamma", "--case", "quasi-nilpotent:1", "--p", "2", "--out", target],
        vec!["matrix", "--nmax", "4", "--interior", "9", "--out", target],
        vec!["gamma", "--case", "quasi-elliptic", "--xi", "1", "--out", target],
        vec!["gamma", "--not-a-flag"],
    ] {
        let (code, stderr) = run(&args);
        assert_eq!(code, 1, "{args:?}");
        assert!(!stderr.is_empty());
        assert!(!out.exists(), "{args:?} wrote a file");
    }
}

#[test]
fn verify_exit_codes_follow_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let target = out.to_str().unwrap();
    let (code, _) = run(&["verify", "--suite", "identity", "--p", "1", "--q", "1", "--nu", "2", "--nmax", "16", "--out", target]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["passed"], true);

    let (code, _) = run(&[
        "verify", "--suite", "commute", "--case", "quasi-elliptic", "--p", "2", "--q", "1", "--nu", "4", "--nmax", "10",
        "--out", target,
    ]);
    assert_eq!(code, 0);

    let (code, _) = run(&[
        "verify", "--suite", "commute", "--symbol", "nonminvariant:re-z1", "--p", "1", "--q", "1", "--nu", "2", "--nmax",
        "12", "--out", target,
    ]);
    assert_eq!(code, 3);
    let report = json(&out);
    assert_eq!(report["passed"], false);
    assert!(report["checks"][0]["value"].as_f64().unwrap() >= 1e-3);
}

#[test]
fn mixed_symbol_matrix_has_the_expected_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let (code, _) = run(&["matrix", "--p", "1", "--q", "1", "--nu", "2", "--nmax", "6", "--symbol", "mixed", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = json(&out);
    let dim = report["dim"].as_u64().unwrap() as usize;
    assert_eq!(dim, 14);
    let re = report["re"].as_array().unwrap();
    let im = report["im"].as_array().unwrap();
    let entry = |r: usize, c: usize| (re[r][c].as_f64().unwrap(), im[r][c].as_f64().unwrap());
    for r in 0..dim {
        for c in 0..dim {
            let (x, y) = entry(r, c);
            if r != c {
                assert!(x.abs() <= 1e-12 && y.abs() <= 1e-12, "({r},{c})");
            }
        }
    }
    // F = |z|² + ξ₁ξ₁^*: the top block is T_{ν+1}(|z|²), diagonal (n+1)/(n+ν+1).
    for n in 0..=6usize {
        let (top, _) = entry(7 + n, 7 + n);
        assert!((top - (n as f64 + 1.0) / (n as f64 + 3.0)).abs() <= 1e-12);
    }
    assert_eq!(report["blocks"].as_array().unwrap().len(), 4);
}

#[test]
fn outputs_do_not_depend_on_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("m{threads}.bin"));
        let status = binary()
            .env("SUPERBERGMAN_THREADS", threads)
            .args(["matrix", "--case", "quasi-parabolic", "--p", "2", "--q", "1", "--nu", "4", "--nmax", "5"])
            .args(["--symbol", "random:7", "--format", "bin", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        let table = dir.path().join(format!("g{threads}.csv"));
        let status = binary()
            .args(["gamma", "--case", "nilpotent", "--p", "2", "--q", "2", "--symbol", "random:3", "--u", "0.5", "--xi", "2,5,10"])
            .args(["--format", "csv", "--threads", threads, "--out", table.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        let read = |p: &Path| std::fs::read(p).unwrap();
        let sidecar = dir.path().join(format!("m{threads}.bin.json"));
        files.push((read(&out), read(&sidecar), read(&table)));
    }
    assert!(files[0] == files[1]);
    assert_eq!(&files[0].0[..8], b"SBTMAT01");
}

fn preset() -> impl Strategy<Value = Preset> {
    prop_oneof![
        Just(Preset::One),
        Just(Preset::Radial),
        (-5.0f64..5.0).prop_map(Preset::Odd),
        Just(Preset::Mixed),
        (0.01f64..20.0).prop_map(Preset::ParabolicExp),
        (0.01f64..20.0).prop_map(Preset::NilpotentExp),
        Just(Preset::NilpotentIm),
        Just(Preset::HyperbolicTheta),
        any::<u64>().prop_map(Preset::Random),
        Just(Preset::ReZ1),
        Just(Preset::AbsZ1Sq),
    ]
}

proptest! {
    #[test]
    fn presets_survive_a_text_roundtrip(p in preset()) {
        let text = p.to_string();
        let back: Preset = text.parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn arbitrary_text_never_panics_the_parser(text in "[a-z:0-9.\\-]{0,24}") {
        let _ = text.parse::<Preset>();
    }
}
