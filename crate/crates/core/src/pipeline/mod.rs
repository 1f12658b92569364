//! End-to-end runs: configuration, data generation, training and evaluation,
//! bound sweeps and topology transfer, plus the files each step writes.

mod commands;
mod config;
mod experiment;
mod metrics;
mod sweep;

pub use commands::{
    cmd_datagen, cmd_eval, cmd_place, cmd_train, cmd_transfer, cmd_verify_bounds, load_scenario,
    topology_transfer, Manifest, TrainReport, TransferReport, CHECKPOINT_FILE, DATASET_FILE,
    MANIFEST_FILE, MANIFEST_FORMAT, PLAN_FILE, VOLTAGES_FILE,
};
pub use config::{BoundSweep, GridSource, RunConfig, Seeds, Task};
pub use experiment::{
    dataset_mode, evaluate, evaluate_scenario, run_experiment, sensor_plan, simulate_voltages,
    time_split, train_and_evaluate, ExperimentOutcome, Scenario, Split,
};
pub use metrics::{
    classification_metrics, mean_squared_error, regression_metrics, Confusion, MetricsReport,
    METRICS_CSV_HEADER,
};
pub use sweep::{bound_sweep, normalized_shift, random_target, sweep_size};
