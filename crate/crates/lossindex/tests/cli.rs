use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_lossindex");
const INDEX_FIT: &str = "nig = { mu = -0.0014, alpha = 0.4826, beta = 0.0006, delta = 0.6553 }";
const BUNDLE_NIG: &str = "nig = { mu = 0.0, alpha = 15.0, beta = 0.0, delta = 0.5 }";

fn bundle() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

/// Copy of the synthetic bundle in a fresh directory, config edited by `edit`.
fn staged(edit: impl Fn(String) -> String) -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    for e in fs::read_dir(bundle()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            fs::copy(&p, d.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let cfg = fs::read_to_string(bundle().join("config.toml")).unwrap();
    fs::write(d.path().join("config.toml"), edit(cfg)).unwrap();
    d
}

fn lossindex(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_seven_files_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let cfg = bundle().join("config.toml");
    let o = lossindex(&["--config", path_str(&cfg), "--out", path_str(out.path()), "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let names = ["panel.csv", "index.csv", "fits.json", "backtest.csv", "surface.csv", "budget.csv", "stress.csv"];
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), names.len());
    for (f, name) in files.iter().zip(names) {
        assert_eq!(f["name"], name);
        let bytes = fs::read(out.path().join(name)).unwrap();
        assert_eq!(f["sha256"], hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(m["command"], "run");
    assert_eq!(m["seed"], 20240611);
    let stress = text(&fs::read(out.path().join("stress.csv")).unwrap());
    assert_eq!(stress.lines().count(), 10);
}

#[test]
fn subcommand_output_is_reproducible() {
    let cfg = bundle().join("config.toml");
    let read = |d: &Path| fs::read(d.join("budget.csv")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = lossindex(&["--config", path_str(&cfg), "--out", path_str(d.path()), "budget"]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    }
    assert_eq!(read(a.path()), read(b.path()));

    let c = tempfile::tempdir().unwrap();
    lossindex(&["--config", path_str(&cfg), "--out", path_str(c.path()), "--seed", "7", "budget"]);
    assert_ne!(read(a.path()), read(c.path()));
    let hash = |d: &Path| {
        let m: serde_json::Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
        m["config_sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(a.path()), hash(b.path()));
    assert_ne!(hash(a.path()), hash(c.path()));
}

#[test]
fn missing_deflators_is_a_data_error() {
    let d = staged(|c| c);
    fs::remove_file(d.path().join("deflators.csv")).unwrap();
    let out = d.path().join("out");
    let o = lossindex(&["--config", path_str(&d.path().join("config.toml")), "--out", path_str(&out), "ingest"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("deflators.csv"), "{}", text(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn validate_lists_missing_fields() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let o = lossindex(&["--config", path_str(&cfg), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    let s = text(&o.stdout);
    for field in ["seed", "input.panel", "input.deflators", "split.train_end", "pricing.nig", "pricing.strikes"] {
        assert!(s.contains(&format!("missing field `{field}`")), "{field} not reported:\n{s}");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let d = staged(|c| c.replace("[split]", "[split]\ntrain_ned = 2010"));
    let o = lossindex(&["--config", path_str(&d.path().join("config.toml")), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("train_ned"));
}

#[test]
fn index_fit_parameters_fail_the_martingale_check() {
    let d = staged(|c| c.replace(BUNDLE_NIG, INDEX_FIT));
    let cfg = d.path().join("config.toml");
    let o = lossindex(&["--config", path_str(&cfg), "validate"]);
    assert_eq!(o.status.code(), Some(0));
    let s = text(&o.stdout);
    assert!(s.contains("martingale measure does not exist"), "{s}");
    assert!(s.contains("ok with 1 warning(s)"), "{s}");

    // pricing itself refuses, and nothing is written
    let out = d.path().join("out");
    let o = lossindex(&["--config", path_str(&cfg), "--out", path_str(&out), "price"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn synthetic_bundle_validates_clean() {
    let o = lossindex(&["--config", path_str(&bundle().join("config.toml")), "validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout).trim(), "ok");
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(lossindex(&["--help"]).status.code(), Some(0));
    assert_eq!(lossindex(&["--version"]).status.code(), Some(0));
    assert_eq!(lossindex(&["frobnicate"]).status.code(), Some(1));
    let o = lossindex(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("--config"));
}
