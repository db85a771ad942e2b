use std::path::Path;
use std::process::{Command, Output};

fn cogharvest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogharvest"))
        .args(args)
        .env("COGHARVEST_OUT_DIR", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The number following `label` on the first line containing it.
fn number_after(text: &str, label: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.contains(label))
        .unwrap_or_else(|| panic!("no `{label}` in\n{text}"));
    let rest = &line[line.find(label).unwrap() + label.len()..];
    rest.split_whitespace()
        .next()
        .unwrap()
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

#[test]
fn subchannel_sweep_has_one_row_per_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = cogharvest(
        dir.path(),
        &[
            "experiment",
            "sumrate-vs-subchannels",
            "--set",
            "num_subchannels = 12",
            "--set",
            "num_available = 12",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sumrate-vs-subchannels.csv")).unwrap();
    let ms: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(ms, ["2", "4", "6", "8", "10", "12"]);
    assert!(csv.starts_with("experiment,seed,config_hash,method,num_available,"));
}

#[test]
fn solve_methods_agree_without_binding_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let out = cogharvest(
        dir.path(),
        &[
            "solve",
            "--method",
            "both",
            "--set",
            "interference_threshold = 1",
            "--set",
            "rate_requirement = 0",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("methods agree"), "{}", stdout(&out));
}

#[test]
fn validate_reports_closed_form_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = cogharvest(
        dir.path(),
        &[
            "validate",
            "--set",
            "num_sus = 2",
            "--set",
            "num_rt_sus = 2",
            "--set",
            "num_available = 6",
        ],
    );
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(number_after(&text, "max relative theta deviation") <= 1e-4, "{text}");
    assert!(text.contains("EFM allocation vs exhaustive allocation"), "{text}");
}

#[test]
fn generated_scenario_feeds_allocate() {
    let dir = tempfile::tempdir().unwrap();
    let gen = cogharvest(dir.path(), &["generate", "--write-config", "resolved.cfg"]);
    assert!(gen.status.success());
    assert!(dir.path().join("scenario.json").exists());
    assert!(dir.path().join("resolved.cfg").exists());
    let alloc = cogharvest(
        dir.path(),
        &["allocate", "--scenario", "scenario.json", "-o", "alloc.json"],
    );
    assert!(alloc.status.success(), "{}", String::from_utf8_lossy(&alloc.stderr));
    assert!(stdout(&alloc).contains("real-time SUs meeting their rate"));
    let from_cfg = cogharvest(dir.path(), &["allocate", "--config", "resolved.cfg"]);
    assert_eq!(stdout(&alloc), stdout(&from_cfg));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cogharvest(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(cogharvest(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        cogharvest(dir.path(), &["experiment", "no-such-experiment"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cogharvest(dir.path(), &["solve", "--set", "num_sus = x"]).status.code(),
        Some(1)
    );
    // a dual solve capped at one iteration cannot certify convergence
    let capped = cogharvest(dir.path(), &["solve", "--method", "dual", "--max-iterations", "1"]);
    assert_eq!(capped.status.code(), Some(2), "{}", stdout(&capped));
    let list = cogharvest(dir.path(), &["experiment", "list"]);
    assert!(stdout(&list).contains("theta-vs-interference"));
}
