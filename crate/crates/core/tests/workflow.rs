use gridgcn::grid::{build_measurement_operator, observe, solve_voltages, GridFile};
use gridgcn::linalg::{CVector, ONE};
use gridgcn::nn::{LayerGso, StgcnModel};
use gridgcn::pipeline::{run_experiment, GridSource, RunConfig, Scenario, Task};
use gridgcn::sensing::{greedy_sensor_placement, rls_recover, zero_fill};
use gridgcn::spectral::spectral_decompose;
use num_complex::Complex64;

fn tiny() -> RunConfig {
    let mut cfg = RunConfig {
        grid: GridSource::Synthetic {
            nodes: 10,
            extra: 3,
            seed: 2,
        },
        steps: 90,
        modes: 3,
        sensors: 6,
        window: 3,
        order: 2,
        temporal_channels: 3,
        graph_channels: 4,
        hidden: vec![8],
        ..RunConfig::default()
    };
    cfg.train.epochs = 4;
    cfg
}

#[test]
fn placement_feeds_recovery() {
    let model = GridFile::synthetic(12, 4, 7).to_model().unwrap();
    let plan = greedy_sensor_placement(&spectral_decompose(&model.y).unwrap(), 4, 7).unwrap();
    let op = build_measurement_operator(&model, &plan.sorted_buses(), 1e-4).unwrap();
    let loads = CVector::from_fn(12, |i, _| {
        if i == model.slack {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.01, 0.004)
        }
    });
    let v = solve_voltages(&model, &loads, ONE).unwrap();
    let z = observe(&op, &v, 3).unwrap();
    let rls = rls_recover(&z, &op, &model.y, 1e-6).unwrap();
    assert!((&rls - &v).norm() < (zero_fill(&z, &op) - &v).norm());
}

#[test]
fn trained_checkpoint_replays_exactly() {
    let cfg = tiny();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.model.scaling().is_some());
    let back = StgcnModel::from_json(&out.model.to_json().unwrap()).unwrap();
    assert_eq!(back.params(), out.model.params());
    assert_eq!(back.scaling(), out.model.scaling());

    let (_, grid) = cfg.load_grid().unwrap();
    let plan = gridgcn::pipeline::sensor_plan(&cfg, &grid).unwrap();
    let scenario = Scenario::build(&cfg, grid, &plan.sorted_buses()).unwrap();
    let (samples, _) = scenario.samples(Task::Pssf).unwrap();
    let gso = LayerGso::new(&scenario.model.y, true).unwrap();
    for s in samples.iter().take(5) {
        assert_eq!(
            out.model.predict(&gso, &s.window).unwrap(),
            back.predict(&gso, &s.window).unwrap()
        );
    }
}

#[test]
fn standardize_toggle_is_honoured() {
    let mut cfg = tiny();
    cfg.standardize = false;
    assert!(run_experiment(&cfg).unwrap().model.scaling().is_none());
}
