use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const KG: &str = "Pulp Fiction\taward received\tPalme d'Or\nbad line\nPulp Fiction\tdirector\tQuentin Tarantino\n";

fn kgcorpus(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgcorpus"))
        .current_dir(dir)
        .env_remove("KGCORPUS_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("report on stderr");
    serde_json::from_str(line).expect("report is JSON")
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("kg.tsv"), KG).unwrap();
    dir
}

#[test]
fn exit_codes() {
    let dir = workdir();
    let d = dir.path();
    assert_eq!(kgcorpus(d, &["--help"]).status.code(), Some(0));
    assert_eq!(kgcorpus(d, &["mask", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(kgcorpus(d, &["nosuch"]).status.code(), Some(1));
    assert_eq!(kgcorpus(d, &["stats", "--triples", "missing.tsv"]).status.code(), Some(1));

    fs::write(d.join("a.txt"), "a\n").unwrap();
    let out = kgcorpus(d, &["mix", "--source", "a=a.txt:0.9", "-o", "mixed.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("mixed.txt").exists());

    let out = kgcorpus(d, &["--strict", "mask", "--triples", "kg.tsv", "-o", "masked.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert!(!d.join("masked.jsonl").exists());
}

#[test]
fn lenient_runs_count_malformed_lines() {
    let dir = workdir();
    let d = dir.path();
    let out = kgcorpus(d, &["ingest", "--input", "kg.tsv", "-o", "clean.tsv"]);
    assert!(out.status.success());
    let r = &report(&out)["report"];
    assert_eq!((r["lines"].as_u64(), r["triples"].as_u64(), r["skipped"].as_u64()), (Some(3), Some(2), Some(1)));
    assert_eq!(fs::read_to_string(d.join("clean.tsv")).unwrap().lines().count(), 2);
}

#[test]
fn both_roles_yield_two_examples() {
    let dir = workdir();
    let d = dir.path();
    let out = kgcorpus(d, &["mask", "--triples", "kg.tsv", "--role", "both", "-o", "masked.jsonl"]);
    assert!(out.status.success());
    let rows = jsonl(&d.join("masked.jsonl"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["input"], "[MASK], award received, Palme d'Or");
    assert_eq!(rows[0]["target"], "Pulp Fiction");
    assert_eq!(rows[1]["input"], "Pulp Fiction, award received, [MASK]");
    assert_eq!(rows[1]["target"], "Palme d'Or");
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = workdir();
    let d = dir.path();
    fs::write(d.join("run.toml"), "seed = 11\n\n[mask]\nrole = \"object\"\nsentinel = \"<X>\"\n").unwrap();

    let out = kgcorpus(d, &["--config", "run.toml", "mask", "--triples", "kg.tsv", "-o", "a.jsonl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["seed"], 11);
    let rows = jsonl(&d.join("a.jsonl"));
    assert!(rows.iter().all(|r| r["masked_role"] == "object" && r["input"].as_str().unwrap().ends_with("<X>")));

    let out = Command::new(env!("CARGO_BIN_EXE_kgcorpus"))
        .current_dir(d)
        .env("KGCORPUS_CONFIG", "run.toml")
        .args(["mask", "--triples", "kg.tsv", "--role", "subject", "--seed", "3", "-o", "b.jsonl"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(report(&out)["seed"], 3);
    let rows = jsonl(&d.join("b.jsonl"));
    assert!(rows.iter().all(|r| r["masked_role"] == "subject" && r["input"].as_str().unwrap().starts_with("<X>")));

    fs::write(d.join("bad.toml"), "colour = \"blue\"\n").unwrap();
    let out = kgcorpus(d, &["--config", "bad.toml", "selftest"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = workdir();
    let d = dir.path();
    let big: String = (0..5000).map(|i| format!("Entity {i}\trelation {}\tValue {}\n", i % 7, i * 31 % 997)).collect();
    fs::write(d.join("big.tsv"), big).unwrap();
    for (p, name) in [("1", "p1.jsonl"), ("4", "p4.jsonl")] {
        let out = kgcorpus(d, &["--seed", "9", "--parallelism", p, "mask", "--triples", "big.tsv", "-o", name]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(d.join("p1.jsonl")).unwrap(), fs::read(d.join("p4.jsonl")).unwrap());
}

#[test]
fn selftest_passes() {
    let dir = workdir();
    let out = kgcorpus(dir.path(), &["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
