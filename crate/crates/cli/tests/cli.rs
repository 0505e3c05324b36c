mod common;

use std::path::Path;

use common::{differing, expect, files, spnplan, stderr};
use spnplan_cli::artifacts::read_table;
use spnplan_cli::commands::SWEEP_HEADER;
use spnplan_core::circuit::{from_json, Circuit, Node};

const SMALL: &str = "dataset_size = 1500\n[oracle]\nn_mc = 2000\n";

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn model(dir: &Path) -> Circuit {
    from_json(&std::fs::read_to_string(dir.join("out/model.json")).unwrap()).unwrap()
}

fn single_steps() -> Vec<Vec<&'static str>> {
    let mut steps = vec![vec!["generate"], vec!["train"]];
    for m in ["spn_max", "spn_exact", "empirical", "gep10"] {
        steps.push(vec!["plan", "--method", m]);
    }
    steps.push(vec!["landscape"]);
    steps.push(vec!["export-lp"]);
    steps
}

#[test]
fn ten_rows_match_the_library_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "dataset_size = 10\n");
    expect(
        dir.path(),
        &["--config", "c.toml", "--seed", "2024", "generate"],
        0,
    );
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/dataset_n10.csv");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("out/dataset.csv")).unwrap(),
        std::fs::read_to_string(golden).unwrap()
    );
    assert!(dir.path().join("out/dataset.meta.json").exists());
}

#[test]
fn ten_row_dataset_trains_a_fully_factorized_circuit() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "dataset_size = 10\n");
    expect(dir.path(), &["--config", "c.toml", "generate"], 0);
    expect(dir.path(), &["--config", "c.toml", "train"], 0);
    let c = model(dir.path());
    assert!(c.report().violations.is_empty());
    let Node::Product { children } = c.node(c.root()) else {
        panic!("root is not a product")
    };
    assert_eq!(children.len(), 8);
    assert!(children
        .iter()
        .all(|&ch| matches!(c.node(ch), Node::Leaf(_))));
}

#[test]
fn every_single_command_is_deterministic() {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        write(dir.path(), "c.toml", SMALL);
        for step in single_steps() {
            let mut args = vec!["--config", "c.toml"];
            args.extend(step);
            let out = spnplan(dir.path(), &args);
            assert!(
                matches!(out.status.code(), Some(0 | 3)),
                "{args:?}: {}",
                stderr(&out)
            );
        }
    }
    let (a, b) = (runs[0].path().join("out"), runs[1].path().join("out"));
    assert!(files(&a).len() >= 11);
    assert_eq!(differing(&a, &b), Vec::<String>::new());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = expect(dir.path(), &["plan", "--method", "milp"], 2);
    assert!(stderr(&out).contains("milp"));
    expect(dir.path(), &["frobnicate"], 2);
    write(dir.path(), "bad.toml", "[planner]\nmin_suport = 3\n");
    let out = expect(dir.path(), &["--config", "bad.toml", "generate"], 2);
    assert!(
        stderr(&out).contains("planner") && stderr(&out).contains("min_suport"),
        "{}",
        stderr(&out)
    );
    write(
        dir.path(),
        "bad.json",
        r#"{"simulation": {"grid": {"max_pv_units": -1}}}"#,
    );
    let out = expect(dir.path(), &["--config", "bad.json", "generate"], 2);
    assert!(
        stderr(&out).contains("simulation.grid.max_pv_units"),
        "{}",
        stderr(&out)
    );
    let out = expect(dir.path(), &["train", "--data", "missing.csv"], 2);
    assert!(stderr(&out).contains("missing.csv"));
    expect(dir.path(), &["--epsilon", "1.5", "generate"], 2);
}

#[test]
fn infeasible_plan_exits_with_three_and_still_writes_its_artifact() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.toml",
        "dataset_size = 500\n[planner]\nmin_support = 1000\n",
    );
    expect(dir.path(), &["--config", "c.toml", "generate"], 0);
    expect(
        dir.path(),
        &["--config", "c.toml", "plan", "--method", "empirical"],
        3,
    );
    let plan: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/plan_empirical.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(plan["feasible"], false);
    assert_eq!(plan["schema"], "spnplan-plan/1");
}

#[test]
fn plan_audit_matches_the_oracle_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SMALL);
    expect(
        dir.path(),
        &["--config", "c.toml", "plan", "--method", "gep50"],
        0,
    );
    let plan: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/plan_gep50.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(plan["oracle_shortfall"]["n_mc"], 2000);
    let est = plan["oracle_shortfall"]["estimate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&est));
}

const SWEEP: &str = r#"dataset_size = 600
data_fractions = [0.0005, 1.0]
repetitions = 2
[oracle]
n_mc = 500
[planner]
methods = ["spn_max", "empirical", "gep5"]
[[learn.grid]]
min_instances = 128
laplace_alpha = 0.01
"#;

#[test]
fn sweep_isolates_failures_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "c.toml", SWEEP);
    expect(d, &["--config", "c.toml", "sweep"], 0);
    let sweep = d.join("out/sweep.csv");
    let (header, rows) = read_table(&sweep).unwrap();
    assert_eq!(header, SWEEP_HEADER);
    assert_eq!(rows.len(), 2 * 2 * 3);
    // 0.0005 × 600 rounds to an empty subsample.
    for r in rows.iter().filter(|r| r[0] == "0.0005") {
        assert_eq!(r[5], "0");
        let expected = if r[3] == "gep5" { "ok" } else { "failed" };
        assert_eq!(r[4], expected, "{r:?}");
        if expected == "failed" {
            assert!(!r[15].is_empty());
        }
    }
    for r in rows.iter().filter(|r| r[0] == "1") {
        assert_ne!(r[4], "failed", "{r:?}");
        assert_eq!(r[5], "600");
    }
    let first = std::fs::read_to_string(&sweep).unwrap();
    let landscape = std::fs::read_to_string(d.join("out/landscape_sweep.csv")).unwrap();
    assert!(landscape.lines().any(|l| l.contains(",spn_max,")));

    // A finished sweep has nothing left to do.
    let out = expect(d, &["--config", "c.toml", "sweep"], 0);
    assert!(stderr(&out).contains("0 of 4"));
    assert_eq!(std::fs::read_to_string(&sweep).unwrap(), first);

    // Drop the last repetition and a half-written line, as after a crash.
    let keep: Vec<&str> = first.lines().take(first.lines().count() - 3).collect();
    let mut cut = keep.join("\n");
    cut.push_str("\n1,1,123,spn_max,o");
    std::fs::write(&sweep, cut).unwrap();
    let out = expect(d, &["--config", "c.toml", "sweep"], 0);
    assert!(stderr(&out).contains("1 of 4"), "{}", stderr(&out));
    assert_eq!(
        spnplan_cli::artifacts::strip_volatile_csv(&std::fs::read_to_string(&sweep).unwrap())
            .unwrap(),
        spnplan_cli::artifacts::strip_volatile_csv(&first).unwrap()
    );

    // Changed settings refuse to mix with old rows unless asked to.
    write(
        d,
        "c2.toml",
        &SWEEP.replace("repetitions = 2", "repetitions = 1"),
    );
    let out = expect(d, &["--config", "c2.toml", "sweep"], 2);
    assert!(stderr(&out).contains("--fresh"));
    expect(d, &["--config", "c2.toml", "sweep", "--fresh"], 0);
    assert_eq!(read_table(&sweep).unwrap().1.len(), 2 * 3);
}

#[test]
fn worker_count_does_not_change_results() {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in runs.iter().zip([1, 3]) {
        write(
            dir.path(),
            "c.toml",
            &format!("{SWEEP}[sweep]\nworkers = {workers}\n"),
        );
        expect(dir.path(), &["--config", "c.toml", "sweep"], 0);
    }
    assert_eq!(
        differing(&runs[0].path().join("out"), &runs[1].path().join("out")),
        Vec::<String>::new()
    );
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        spnplan_cli::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
