use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SIMULATE: &str = "experiment = \"simulate\"\nseed = 3\n[domain]\nkind = \"interval\"\n\
    [measure]\nkind = \"point_mass\"\nat = 0.5\nweight = 2.0\n[params]\nt_end = 0.2\nh = 1e-3\nn_paths = 50\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastic-jump"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, config: &Path, out: &str, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(dir.join(out)).args(extra).output().unwrap()
}

#[test]
fn successful_run_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    let out = run(tmp.path(), &cfg, "out", &["--dump-paths", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for f in ["endpoints.csv", "jumps.csv", "paths.csv", "config.toml", "manifest.json", "plot_local_time_increments.py"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "simulate");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["dump_paths"], 2);
    assert_eq!(m["passed"], true);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["elastic-jump-core"].is_string());
    let echo = fs::read(dir.join("config.toml")).unwrap();
    assert_eq!(m["config_sha256"], elastic_jump::output::sha256_hex(&echo));
    for entry in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"], elastic_jump::output::sha256_hex(&bytes));
    }
    let endpoints = fs::read_to_string(dir.join("endpoints.csv")).unwrap();
    assert!(endpoints.starts_with("path,x,local_time,jumps\r\n"));
    assert_eq!(endpoints.lines().count(), 51);
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    for (out, seed) in [("a", "3"), ("b", "3"), ("c", "4")] {
        assert_eq!(run(tmp.path(), &cfg, out, &["--seed", seed]).status.code(), Some(0));
    }
    let read = |d: &str| fs::read(tmp.path().join(d).join("jumps.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn invalid_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SIMULATE.replace("h = 1e-3", "h = 0.5");
    let cfg = write_config(tmp.path(), "bad.toml", &bad);
    let out = run(tmp.path(), &cfg, "out", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.h"));
    assert!(!tmp.path().join("out").exists());

    let negative = SIMULATE.replace("weight = 2.0", "weight = -1.0");
    let cfg = write_config(tmp.path(), "neg.toml", &negative);
    assert_eq!(run(tmp.path(), &cfg, "out", &[]).status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());

    let missing = tmp.path().join("absent.toml");
    assert_eq!(run(tmp.path(), &missing, "out", &[]).status.code(), Some(2));
}

#[test]
fn dump_paths_rejected_for_spectral() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "spec.toml",
        "experiment = \"spectral\"\n[domain]\nkind = \"interval\"\n[measure]\nkind = \"point_mass\"\nat = 0.5\n",
    );
    let out = run(tmp.path(), &cfg, "out", &["--dump-paths", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn censored_escape_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "esc.toml",
        "experiment = \"escape\"\n[domain]\nkind = \"dumbbell\"\n[measure]\nkind = \"zero\"\n\
         [params]\neps_grid = [0.05]\nn_paths = 20\nh = 1e-3\nhorizon = 1.0\njump = false\n",
    );
    let out = run(tmp.path(), &cfg, "out", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["passed"], false);
    let mfpt = fs::read_to_string(tmp.path().join("out/mfpt.csv")).unwrap();
    assert!(mfpt.contains("censoring_dominates"));
}

#[test]
fn validate_prints_completed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.toml", SIMULATE);
    let out = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ks_jumps = 5"), "{text}");
    assert_eq!(
        elastic_jump::config::parse_config(&text).unwrap(),
        elastic_jump::config::parse_config(SIMULATE).unwrap()
    );
    let bad = write_config(tmp.path(), "bad.toml", "experiment = \"nope\"\n");
    assert_eq!(bin().arg("validate").arg(&bad).output().unwrap().status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert_eq!(seen, 6);
}
