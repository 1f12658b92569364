use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Seeds, Task};
use super::experiment::{evaluate_scenario, sensor_plan, train_and_evaluate, Scenario};
use super::metrics::{MetricsReport, METRICS_CSV_HEADER};
use super::sweep::bound_sweep;
use crate::bounds::{BoundReport, CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::{build_measurement_operator, read_phasor_csv, write_phasor_csv, Quantity};
use crate::nn::StgcnModel;
use crate::sensing::{AttackMode, Dataset, SensorPlan};

pub const MANIFEST_FORMAT: &str = "gridgcn-dataset";
pub const PLAN_FILE: &str = "sensor_plan.json";
pub const VOLTAGES_FILE: &str = "voltages.csv";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// How a dataset was generated, checked before training on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub task: Task,
    pub seed: u64,
    pub seeds: Seeds,
    pub node_count: usize,
    pub steps: usize,
    pub step_hours: f64,
    pub window: usize,
    pub horizon: usize,
    pub noise_sd: f64,
    pub mode: AttackMode,
    pub observed: Vec<usize>,
    pub attack_sets: Vec<Vec<usize>>,
    pub samples: usize,
    pub attacked_samples: usize,
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: PathBuf) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Place meters and write `sensor_plan.json`.
pub fn cmd_place(cfg: &RunConfig) -> Result<SensorPlan> {
    cfg.validate()?;
    let (_, model) = cfg.load_grid()?;
    let plan = sensor_plan(cfg, &model)?;
    fs::write(out_dir(cfg)?.join(PLAN_FILE), plan.to_json()? + "\n")?;
    Ok(plan)
}

/// Simulate the grid and write the voltage series, the windowed dataset, the
/// sensor plan and a manifest.
pub fn cmd_datagen(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let (_, model) = cfg.load_grid()?;
    let plan = sensor_plan(cfg, &model)?;
    let scenario = Scenario::build(cfg, model, &plan.sorted_buses())?;
    let dir = out_dir(cfg)?;
    fs::write(dir.join(PLAN_FILE), plan.to_json()? + "\n")?;
    let mut w = BufWriter::new(File::create(dir.join(VOLTAGES_FILE))?);
    write_phasor_csv(&mut w, &[&scenario.voltages])?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join(DATASET_FILE))?);
    scenario.dataset.write_jsonl(&mut w)?;
    w.flush()?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        task: cfg.task,
        seed: cfg.seed,
        seeds: cfg.seeds(),
        node_count: scenario.model.node_count,
        steps: cfg.steps,
        step_hours: scenario.voltages.step_hours,
        window: cfg.window,
        horizon: cfg.horizon,
        noise_sd: cfg.noise_sd,
        mode: super::experiment::dataset_mode(cfg),
        observed: scenario.op.observed.clone(),
        attack_sets: scenario.dataset.attack_sets.clone(),
        samples: scenario.dataset.samples.len(),
        attacked_samples: scenario
            .dataset
            .samples
            .iter()
            .filter(|s| s.hypothesis == crate::sensing::Hypothesis::H1)
            .count(),
    };
    write_json(dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reload the scenario written by [`cmd_datagen`], checking it matches `cfg`.
pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let dir = &cfg.out;
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::InvalidArgument(format!(
            "{} not found; run datagen with this config first",
            manifest_path.display()
        )));
    }
    let manifest: Manifest = read_json(manifest_path)?;
    let expected = (cfg.task, cfg.seed, cfg.window, cfg.horizon, cfg.steps);
    let found = (
        manifest.task,
        manifest.seed,
        manifest.window,
        manifest.horizon,
        manifest.steps,
    );
    if manifest.format != MANIFEST_FORMAT || expected != found {
        return Err(Error::InvalidArgument(format!(
            "dataset in {} was generated for (task, seed, T, H, steps) = {found:?}, config asks for {expected:?}",
            dir.display()
        )));
    }
    let (_, model) = cfg.load_grid()?;
    if model.node_count != manifest.node_count {
        return Err(Error::InvalidArgument(
            "dataset and grid disagree on bus count".into(),
        ));
    }
    let op = build_measurement_operator(&model, &manifest.observed, manifest.noise_sd)?;
    let voltages = read_phasor_csv(
        BufReader::new(File::open(dir.join(VOLTAGES_FILE))?),
        Quantity::Voltage,
        manifest.step_hours,
    )?;
    let mut dataset = Dataset::read_jsonl(BufReader::new(File::open(dir.join(DATASET_FILE))?))?;
    dataset.attack_sets = manifest.attack_sets;
    Scenario::from_parts(cfg, model, op, voltages, dataset)
}

fn write_metrics(dir: &Path, stem: &str, rows: &[(&str, &MetricsReport)]) -> Result<()> {
    let mut csv = String::from(METRICS_CSV_HEADER);
    csv.push('\n');
    for (split, m) in rows {
        csv.push_str(&m.csv_row(split));
        csv.push('\n');
    }
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let map: serde_json::Map<String, serde_json::Value> = rows
        .iter()
        .map(|(k, m)| Ok((k.to_string(), serde_json::to_value(m)?)))
        .collect::<Result<_>>()?;
    write_json(dir.join(format!("{stem}.json")), &map)
}

/// Metrics of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// Train on the generated dataset; write the checkpoint, the loss trace and
/// validation/test metrics.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let scenario = load_scenario(cfg)?;
    let outcome = train_and_evaluate(cfg, &scenario)?;
    let dir = out_dir(cfg)?;
    fs::write(dir.join(CHECKPOINT_FILE), outcome.model.to_json()? + "\n")?;
    let mut trace = String::from("epoch,train_loss,val_loss\n");
    for r in &outcome.trace {
        trace.push_str(&format!(
            "{},{:.12e},{:.12e}\n",
            r.epoch, r.train_loss, r.val_loss
        ));
    }
    fs::write(dir.join("train_trace.csv"), trace)?;
    write_json(dir.join("split.json"), &outcome.split)?;
    write_metrics(
        dir,
        "metrics",
        &[("val", &outcome.validation), ("test", &outcome.test)],
    )?;
    Ok(TrainReport {
        best_epoch: outcome.best_epoch,
        validation: outcome.validation,
        test: outcome.test,
    })
}

fn load_checkpoint(cfg: &RunConfig) -> Result<StgcnModel> {
    let path = cfg.out.join(CHECKPOINT_FILE);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "{} not found; run train with this config first",
            path.display()
        )));
    }
    StgcnModel::from_json(&fs::read_to_string(path)?)
}

/// Score the saved checkpoint on the test split; writes `eval.csv` / `eval.json`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = load_checkpoint(cfg)?;
    let scenario = load_scenario(cfg)?;
    let report = evaluate_scenario(cfg, &model, &scenario)?;
    write_metrics(out_dir(cfg)?, "eval", &[("test", &report)])?;
    Ok(report)
}

/// Run the configured bound sweep; writes `bounds.csv` and `bounds.json`.
pub fn cmd_verify_bounds(cfg: &RunConfig) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let rows = bound_sweep(cfg)?;
    let dir = out_dir(cfg)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    fs::write(dir.join("bounds.csv"), csv)?;
    write_json(dir.join("bounds.json"), &rows)?;
    Ok(rows)
}

/// Test metrics of a trained model before and after a line trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub tripped_line: usize,
    pub from: usize,
    pub to: usize,
    /// Original topology and shift operator.
    pub original: MetricsReport,
    /// Post-trip readings with the post-trip shift operator.
    pub tripped: MetricsReport,
    /// Post-trip readings, but the network still fed the original operator.
    pub stale_gso: MetricsReport,
    /// Line put back at its original position.
    pub restored: MetricsReport,
    /// `tripped / original` test MSE, for estimation runs.
    pub mse_inflation: Option<f64>,
    pub restored_matches_original: bool,
}

/// Evaluate the trained parameters on a grid with one line tripped. Readings
/// and the recovery operator follow the new topology; the meters stay put.
pub fn topology_transfer(cfg: &RunConfig, model: &StgcnModel) -> Result<TransferReport> {
    cfg.validate()?;
    let (_, grid) = cfg.load_grid()?;
    let line = cfg.trip_line;
    let branch = *grid.branches.get(line).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "trip_line {line} does not exist ({} branches)",
            grid.branches.len()
        ))
    })?;
    let observed = sensor_plan(cfg, &grid)?.sorted_buses();
    let tripped_grid = grid.without_branch(line)?;
    let restored_grid = tripped_grid.with_branch(line, branch)?;

    let original = evaluate_scenario(cfg, model, &Scenario::build(cfg, grid.clone(), &observed)?)?;
    let tripped_scenario = Scenario::build(cfg, tripped_grid, &observed)?;
    let tripped = evaluate_scenario(cfg, model, &tripped_scenario)?;
    let stale = Scenario {
        model: grid,
        ..tripped_scenario
    };
    let stale_gso = evaluate_scenario(cfg, model, &stale)?;
    let restored = evaluate_scenario(cfg, model, &Scenario::build(cfg, restored_grid, &observed)?)?;

    let mse_inflation = match (tripped.mse, original.mse) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(TransferReport {
        tripped_line: line,
        from: branch.from,
        to: branch.to,
        restored_matches_original: restored == original,
        original,
        tripped,
        stale_gso,
        restored,
        mse_inflation,
    })
}

/// [`topology_transfer`] on the saved checkpoint; writes `transfer.csv` / `transfer.json`.
pub fn cmd_transfer(cfg: &RunConfig) -> Result<TransferReport> {
    let model = load_checkpoint(cfg)?;
    let report = topology_transfer(cfg, &model)?;
    let dir = out_dir(cfg)?;
    write_metrics(
        dir,
        "transfer",
        &[
            ("original", &report.original),
            ("tripped", &report.tripped),
            ("stale_gso", &report.stale_gso),
            ("restored", &report.restored),
        ],
    )?;
    write_json(dir.join("transfer_summary.json"), &report)?;
    Ok(report)
}
