use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn gridgcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridgcn"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let grid = data("grid10.json");
    let text = format!(
        r#"{{
  "grid": {grid:?},
  "seed": 3,
  "steps": 90,
  "modes": 3,
  "sensors": 6,
  "window": 3,
  "order": 2,
  "temporal_channels": 3,
  "graph_channels": 4,
  "hidden": [8],
  "train": {{ "epochs": 2 }},
  "bounds": {{ "eps": [0.0, 0.05], "orders": [1, 2], "seeds": 1, "trials": 5, "inputs": 4 }},
  "trip_line": 10{extra}
}}"#
    );
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(config: &Path, out: &Path, cmd: &str) -> String {
    let o = gridgcn(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        cmd,
    ]);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn estimation_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    run_ok(&cfg, &out, "place");
    assert!(out.join("sensor_plan.json").exists());

    run_ok(&cfg, &out, "datagen");
    let first = std::fs::read(out.join("dataset.jsonl")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    // 90 steps, T = 3, H = 0.
    assert_eq!(manifest["samples"], 88);
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 88);
    run_ok(&cfg, &out, "datagen");
    assert_eq!(std::fs::read(out.join("dataset.jsonl")).unwrap(), first);

    let train = run_ok(&cfg, &out, "train");
    assert!(train.contains("test: samples"));
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let eval = run_ok(&cfg, &out, "eval");
    let test_line = train.lines().find(|l| l.starts_with("test:")).unwrap();
    assert!(eval.contains(test_line), "{eval} vs {test_line}");
    assert!(metrics.lines().count() == 3);

    let transfer = run_ok(&cfg, &out, "transfer");
    assert!(
        transfer.contains("restore reproduces original: true"),
        "{transfer}"
    );
    let rows = std::fs::read_to_string(out.join("transfer.csv")).unwrap();
    for split in ["original", "tripped", "stale_gso", "restored"] {
        assert!(
            rows.lines().any(|l| l.starts_with(split)),
            "{split} missing"
        );
    }
}

#[test]
fn seeded_training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#", "task": "fdi", "attack": { "size": 3, "pool": 2 }"#,
    );
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        run_ok(&cfg, &out, "datagen");
        run_ok(&cfg, &out, "train");
        outputs.push((
            std::fs::read_to_string(out.join("metrics.json")).unwrap(),
            std::fs::read_to_string(out.join("checkpoint.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].0.contains("accuracy"));
}

#[test]
fn verify_bounds_writes_one_row_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("bounds");
    let stdout = run_ok(&cfg, &out, "verify-bounds");
    assert!(stdout.contains("16 rows, 0 with violations"), "{stdout}");
    let csv = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 4);
    assert!(csv.starts_with("experiment,kind,nodes,order,eps"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), r#", "threshold": 1.5"#);
    let o = gridgcn(&[
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "place",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let o = gridgcn(&["--config", missing.to_str().unwrap(), "place"]);
    assert_eq!(o.status.code(), Some(2));

    let typo = dir.path().join("typo.json");
    std::fs::write(&typo, r#"{"sede": 1}"#).unwrap();
    assert_eq!(
        gridgcn(&["--config", typo.to_str().unwrap(), "place"])
            .status
            .code(),
        Some(2)
    );

    let eps = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&eps)
        .unwrap()
        .replace("[0.0, 0.05]", "[1.0]");
    std::fs::write(&eps, text).unwrap();
    let o = gridgcn(&[
        "--config",
        eps.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "verify-bounds",
    ]);
    assert_eq!(o.status.code(), Some(2));

    // Training before datagen is a usage error.
    let cfg = write_config(dir.path(), "");
    let o = gridgcn(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "train",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("datagen"));
}

#[test]
fn infeasible_attack_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // Every bus metered and one compromised: its honest neighbors see any change.
    let cfg = write_config(
        dir.path(),
        r#", "task": "fdi", "attack_mode": {"kind": "attacked"}, "attack": { "size": 1, "max_tries": 50 }"#,
    );
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace(r#""sensors": 6"#, r#""sensors": 10"#);
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let o = gridgcn(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "datagen",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
