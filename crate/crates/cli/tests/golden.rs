//! Every subcommand is run twice against checked-in fixtures; both runs must
//! be byte-identical to each other and to the golden file. Set
//! `UPDATE_GOLDEN=1` to rewrite the golden files.

mod common;

use common::{check_golden, run};

fn golden(name: &str) {
    if let Err(msg) = check_golden(name) {
        panic!("{msg}");
    }
}

#[test]
fn enumerate() {
    golden("enumerate");
}

#[test]
fn learn_sampled() {
    golden("learn-sampled");
}

#[test]
fn learn_file() {
    golden("learn-file");
}

#[test]
fn learn_predictor() {
    golden("learn-predictor");
}

#[test]
fn simulate_continuous() {
    golden("simulate-continuous");
}

#[test]
fn curve_universal() {
    golden("curve-universal");
}

#[test]
fn curve_rate() {
    golden("curve-rate");
}

#[test]
fn fit() {
    golden("fit");
}

#[test]
fn verify_bounds() {
    golden("verify-bounds");
}

#[test]
fn transient() {
    golden("transient");
}

#[test]
fn regret() {
    golden("regret");
}

#[test]
fn seed_override_changes_output() {
    let base = run(&["learn", "--config", "small.cfg", "--n", "200", "--out", "-"]);
    let other = run(&["learn", "--config", "small.cfg", "--n", "200", "--seed", "4", "--out", "-"]);
    assert!(base.status.success() && other.status.success());
    assert_ne!(base.stdout, other.stdout);
}

#[test]
fn file_output_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested").join("regret.csv");
    let to_file = run(&["regret", "--config", "small.cfg", "--out", target.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let to_stdout = run(&["regret", "--config", "small.cfg", "--out", "-"]);
    assert_eq!(std::fs::read(&target).unwrap(), to_stdout.stdout);
    // No temporary files are left next to the output.
    assert_eq!(std::fs::read_dir(target.parent().unwrap()).unwrap().count(), 1);
}

#[test]
fn config_errors_are_all_reported() {
    let out = run(&["learn", "--config", "broken.cfg", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for needle in ["line 2", "line 3", "line 5", "line 6", "4 config error(s)"] {
        assert!(stderr.contains(needle), "missing {needle:?} in {stderr}");
    }
}

#[test]
fn usage_errors_exit_nonzero() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["learn", "--config", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--curve", "small.cfg"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--curve", "rate.csv", "--window", "9"]).status.code(), Some(2));
    let rival = run(&["transient", "--config", "small.cfg", "--index", "4", "--out", "-"]);
    assert_eq!(rival.status.code(), Some(2), "{}", String::from_utf8_lossy(&rival.stdout));
}

#[test]
fn shipped_configs_resolve() {
    let dir = common::tests_dir().join("../../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let text = std::fs::read_to_string(&path).unwrap();
            let cfg = unilearn::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
