#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Every subcommand with the fixture arguments its golden file was made from.
pub const GOLDEN_CASES: &[(&str, &[&str])] = &[
    ("enumerate", &["enumerate", "--count", "40", "--start", "1000", "--out", "-"]),
    ("learn-sampled", &["learn", "--config", "small.cfg", "--n", "200", "--out", "-"]),
    ("learn-file", &["learn", "--config", "small.cfg", "--data", "small.data", "--out", "-"]),
    (
        "learn-predictor",
        &["learn", "--config", "small.cfg", "--data", "small.data", "--predictor", "-", "--out", "/dev/null"],
    ),
    (
        "simulate-continuous",
        &["simulate-continuous", "--config", "small.cfg", "--halt-after", "6000", "--n", "100", "--out", "-"],
    ),
    ("curve-universal", &["curve", "--config", "small.cfg", "--out", "-"]),
    ("curve-rate", &["curve", "--config", "rate.cfg", "--learner", "rate", "--out", "-"]),
    ("fit", &["fit", "--curve", "rate.csv", "--window", "64,4096", "--out", "-"]),
    ("verify-bounds", &["verify-bounds", "--seed", "7", "--trials", "1000", "--out", "-"]),
    ("transient", &["transient", "--config", "transient.cfg", "--index", "3", "--out", "-"]),
    ("regret", &["regret", "--config", "small.cfg", "--out", "-"]),
];

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

/// Runs the binary from the fixtures directory so relative paths in headers
/// are stable.
pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unilearn"))
        .args(args)
        .current_dir(tests_dir().join("fixtures"))
        .output()
        .expect("spawn unilearn")
}

/// Runs a case twice; both runs must succeed, agree byte for byte, and match
/// the golden file. `UPDATE_GOLDEN` rewrites the file instead.
pub fn check_golden(name: &str) -> Result<(), String> {
    let args = GOLDEN_CASES.iter().find(|(n, _)| *n == name).ok_or_else(|| format!("no case {name}"))?.1;
    let first = run(args);
    let second = run(args);
    if !first.status.success() {
        return Err(format!("{name}: {:?}\n{}", first.status, String::from_utf8_lossy(&first.stderr)));
    }
    if first.stdout != second.stdout {
        return Err(format!("{name}: output differs between runs"));
    }
    if first.stdout.is_empty() {
        return Err(format!("{name}: empty output"));
    }
    let path = tests_dir().join("golden").join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &first.stdout).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}; rerun with UPDATE_GOLDEN=1", path.display()))?;
    if expected != first.stdout {
        return Err(format!(
            "{name}: output differs from {}\n--- got ---\n{}",
            path.display(),
            String::from_utf8_lossy(&first.stdout)
        ));
    }
    Ok(())
}
