//! Config files supply defaults for command-line flags.
//!
//! A config is a TOML or JSON object. Top-level `seed`, `parallelism`,
//! `strict` and `report` set the global flags; a table named after a
//! subcommand sets that subcommand's flags, keyed by long flag name:
//!
//! ```toml
//! seed = 7
//! parallelism = 4
//!
//! [mask]
//! triples = "kg.tsv"
//! role = "both"
//! output = "masked.jsonl"
//! ```
//!
//! The defaults are spliced into the argument list right after the
//! subcommand, skipping any flag already given, so explicit flags always win.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

use crate::args::SUBCOMMANDS;

pub const CONFIG_ENV: &str = "KGCORPUS_CONFIG";

const GLOBAL_KEYS: [&str; 4] = ["seed", "parallelism", "strict", "report"];

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let arg = arg.to_string_lossy();
        if arg == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()).map(PathBuf::from)
}

pub fn load(path: &Path) -> Result<serde_json::Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Value = if is_json {
        serde_json::from_str(&text).with_context(|| format!("malformed JSON config {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("malformed TOML config {}", path.display()))?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must be a table of settings", path.display()),
    }
}

fn given(argv: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let with_value = format!("{long}=");
    argv.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&with_value) || (flag == "output" && a == "-o")
    })
}

fn push_setting(out: &mut Vec<OsString>, key: &str, value: &Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Bool(true) => out.push(flag.into()),
        Value::Bool(false) | Value::Null => {}
        Value::String(s) => out.extend([flag.into(), s.into()]),
        Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
        Value::Array(items) => {
            for item in items {
                if matches!(item, Value::Array(_) | Value::Object(_) | Value::Bool(_)) {
                    bail!("config key `{key}`: list items must be strings or numbers");
                }
                push_setting(out, key, item)?;
            }
        }
        Value::Object(_) => bail!("config key `{key}`: nested tables are not allowed here"),
    }
    Ok(())
}

/// Returns `argv` with config defaults inserted.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let settings = load(&path)?;
    let position = argv
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1);
    let Some(position) = position else {
        // clap reports the missing subcommand
        return Ok(argv);
    };
    let subcommand = argv[position].to_string_lossy().into_owned();

    // Globals first, then the subcommand's table, whatever the key order.
    let mut extra = Vec::new();
    let mut table = None;
    for (key, value) in &settings {
        let flag = key.replace('_', "-");
        if GLOBAL_KEYS.contains(&flag.as_str()) {
            if !given(&argv, &flag) {
                push_setting(&mut extra, &flag, value)?;
            }
        } else if SUBCOMMANDS.contains(&flag.as_str()) {
            if flag != subcommand {
                continue;
            }
            let Value::Object(t) = value else {
                bail!("config key `{key}` must be a table");
            };
            table = Some(t);
        } else {
            bail!("unknown config key `{key}` in {}", path.display());
        }
    }
    for (k, v) in table.into_iter().flatten() {
        let f = k.replace('_', "-");
        if f == "config" {
            return Err(anyhow!("config files cannot name another config"));
        }
        if !given(&argv, &f) {
            push_setting(&mut extra, &f, v)?;
        }
    }
    let mut merged = argv;
    let tail = merged.split_off(position + 1);
    merged.extend(extra);
    merged.extend(tail);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    fn write(name: &str, body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        (dir, p)
    }

    #[test]
    fn flags_override_config() {
        let (_d, p) = write("c.toml", "seed = 7\n[mask]\nrole = \"both\"\noutput = \"x.jsonl\"\n[mix]\nblock = 4\n");
        let argv = os(&["kgcorpus", "--config", p.to_str().unwrap(), "mask", "-o", "y.jsonl"]);
        let merged = merge(argv).unwrap();
        let merged: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&merged[3..], ["mask", "--seed", "7", "--role", "both", "-o", "y.jsonl"]);
    }

    #[test]
    fn json_config_and_lists() {
        let (_d, p) = write("c.json", r#"{"strict": true, "delta": {"results": ["a.json", "b.json"]}}"#);
        let argv = os(&["kgcorpus", "delta", "--config", p.to_str().unwrap()]);
        let merged: Vec<String> = merge(argv).unwrap().iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(
            &merged[1..6],
            ["delta", "--strict", "--results", "a.json", "--results"]
        );
    }

    #[test]
    fn bad_configs() {
        let (_d, p) = write("c.toml", "colour = 1\n");
        assert!(merge(os(&["k", "--config", p.to_str().unwrap(), "stats"])).is_err());
        let (_d, p) = write("c.json", "{not json");
        assert!(merge(os(&["k", "--config", p.to_str().unwrap(), "stats"])).is_err());
        assert!(merge(os(&["k", "--config", "/nonexistent/c.toml", "stats"])).is_err());
    }
}
