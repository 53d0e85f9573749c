use std::path::{Path, PathBuf};
use std::process::Command;

use apkam::cli::{compare_golden, read_config, read_trace, run, GoldenTolerances, Scenario, Verdict};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apkam"))
}

#[test]
fn golden_kam_run_reproduces() {
    let cfg = read_config(&root().join("configs/kam-run.toml")).unwrap();
    let gold = read_trace(&root().join("tests/data/kam-run.golden.toml")).unwrap();
    let out = run(&cfg).unwrap();
    assert_eq!(out.trace.config_hash, gold.config_hash);
    let rep = compare_golden(&out.trace, &gold, &GoldenTolerances::default()).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures);
    assert!(rep.compared >= 10);
}

#[test]
fn shipped_configs_parse() {
    let dir = root().join("configs");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let c = read_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert!(Scenario::ALL.contains(&c.scenario));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn binary_exit_status_follows_verdict() {
    let ok = bin().args(["dioph-scan"]).output().unwrap();
    assert!(ok.status.success());
    let cfg = root().join("configs/dioph-resonant.toml");
    let bad = bin().arg("dioph-scan").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("verdict failed") && text.contains("witness"), "{text}");
}

#[test]
fn binary_rejects_mismatched_scenario() {
    let cfg = root().join("configs/dioph-resonant.toml");
    let out = bin().arg("kam-run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn binary_golden_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs/homological.toml");
    let rec = bin()
        .args(["golden", "record", "--seed", "11", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(rec.status.success());
    let golden = dir.path().join("golden.toml");
    assert_eq!(read_trace(&golden).unwrap().verdict, Verdict::Certified);
    let same = bin()
        .args(["golden", "check", "--seed", "11", "--config"])
        .arg(&cfg)
        .arg("--golden")
        .arg(&golden)
        .output()
        .unwrap();
    assert!(same.status.success(), "{}", String::from_utf8_lossy(&same.stdout));
    let other = bin()
        .args(["golden", "check", "--config"])
        .arg(root().join("configs/dioph-golden.toml"))
        .arg("--golden")
        .arg(&golden)
        .output()
        .unwrap();
    assert_eq!(other.status.code(), Some(1));
    let tsv = std::fs::read_to_string(dir.path().join("homological.tsv")).unwrap();
    assert!(tsv.starts_with("# apkam "));
}

#[test]
fn subcommands_are_listed() {
    let help = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&help.stdout);
    for s in ["solve-homological", "kam-step", "kam-run", "dioph-scan", "small-twist", "oscillator", "golden"] {
        assert!(text.contains(s), "{s}");
    }
    let help = bin().args(["oscillator", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&help.stdout);
    for s in ["simulate", "poincare", "expansion", "bounded", "resonant"] {
        assert!(text.contains(s), "{s}");
    }
}
