use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Task};
use super::metrics::{classification_metrics, regression_metrics, MetricsReport};
use crate::error::{Error, Result};
use crate::grid::{
    build_measurement_operator, simulate_phasors, synth_load_series, AdmittanceModel,
    MeasurementOperator, PhasorSeries,
};
use crate::linalg::{all_finite, CVector, ONE};
use crate::nn::{train, EpochRecord, LossContext, Prediction, Sample, Scaling, StgcnModel, Target};
use crate::sensing::{
    build_dataset, greedy_sensor_placement, AttackMode, Dataset, DatasetSpec, RlsOperator,
    SensorPlan,
};
use crate::spectral::spectral_decompose;

/// Greedy meter placement for the configured `|K|` and `|A|`.
pub fn sensor_plan(cfg: &RunConfig, model: &AdmittanceModel) -> Result<SensorPlan> {
    let basis = spectral_decompose(&model.y)?;
    greedy_sensor_placement(&basis, cfg.modes, cfg.sensors)
}

/// Bus voltages over the run, one power flow per step.
pub fn simulate_voltages(cfg: &RunConfig, model: &AdmittanceModel) -> Result<PhasorSeries> {
    let loads = synth_load_series(
        model.node_count,
        model.slack,
        cfg.steps,
        cfg.seeds().loads,
        &cfg.profile,
    )?;
    Ok(simulate_phasors(model, &loads, ONE)?.0)
}

/// Attack mode of the dataset a task trains on.
pub fn dataset_mode(cfg: &RunConfig) -> AttackMode {
    match cfg.task {
        Task::Pssf => AttackMode::Clean,
        Task::Fdi => cfg.attack_mode,
    }
}

/// A grid with its meters, simulated readings and windowed dataset.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: AdmittanceModel,
    pub op: MeasurementOperator,
    pub rls: RlsOperator,
    pub voltages: PhasorSeries,
    pub dataset: Dataset,
}

impl Scenario {
    /// Simulate `model` metered at `observed` and window the readings.
    pub fn build(cfg: &RunConfig, model: AdmittanceModel, observed: &[usize]) -> Result<Scenario> {
        let voltages = simulate_voltages(cfg, &model)?;
        let op = build_measurement_operator(&model, observed, cfg.noise_sd)?;
        let spec = DatasetSpec {
            window: cfg.window,
            horizon: cfg.horizon,
            mode: dataset_mode(cfg),
            attack: cfg.attack.clone(),
        };
        let dataset = build_dataset(&voltages, &model, &op, &spec, cfg.seeds().readings)?;
        Scenario::from_parts(cfg, model, op, voltages, dataset)
    }

    /// Assemble from a dataset produced earlier.
    pub fn from_parts(
        cfg: &RunConfig,
        model: AdmittanceModel,
        op: MeasurementOperator,
        voltages: PhasorSeries,
        dataset: Dataset,
    ) -> Result<Scenario> {
        let rls = RlsOperator::new(&op, &model.y, cfg.mu1)?;
        Ok(Scenario {
            model,
            op,
            rls,
            voltages,
            dataset,
        })
    }

    /// Network samples (recovered windows) and the least-squares estimate of
    /// the target state, which is the last recovered column.
    pub fn samples(&self, task: Task) -> Result<(Vec<Sample>, Vec<CVector>)> {
        self.dataset
            .samples
            .par_iter()
            .map(|s| {
                let window = s.recovered_window(&self.rls)?;
                let estimate = window.column(window.ncols() - 1).into_owned();
                let target = match task {
                    Task::Pssf => Target::Forecast {
                        next: s.target.clone(),
                        measured_power: Some(s.power.clone()),
                    },
                    Task::Fdi => Target::Labels(s.labels.clone()),
                };
                Ok((Sample { window, target }, estimate))
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    }
}

/// Time-ordered sample indices of the three splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// 70/15/15 split by time. Samples whose window overlaps the previous split's
/// last window or target are dropped, so no reading is shared across splits.
/// `times` must be strictly increasing.
pub fn time_split(times: &[usize], window: usize, horizon: usize) -> Result<Split> {
    let n = times.len();
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sample times must increase".into()));
    }
    let b1 = (n as f64 * 0.70).round() as usize;
    let b2 = (n as f64 * 0.85).round() as usize;
    // Footprint of the sample at time t: readings t+1-T ..= t, target t+H.
    let after = |range: std::ops::Range<usize>, prev_end: Option<usize>| -> Vec<usize> {
        range
            .filter(|&i| prev_end.is_none_or(|end| times[i] + 1 > end + window))
            .collect()
    };
    let train: Vec<usize> = (0..b1).collect();
    let val = after(b1..b2, train.last().map(|&i| times[i] + horizon));
    let test = after(
        b2..n,
        val.last().or(train.last()).map(|&i| times[i] + horizon),
    );
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{n} samples leave an empty train or test split; lengthen the run"
        )));
    }
    Ok(Split { train, val, test })
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Score `model` on the given samples.
pub fn evaluate(
    model: &StgcnModel,
    ctx: &LossContext,
    samples: &[Sample],
    baseline: &[CVector],
    threshold: f64,
) -> Result<MetricsReport> {
    let predictions: Vec<Prediction> = samples
        .par_iter()
        .map(|s| model.predict(&ctx.gso, &s.window))
        .collect::<Result<_>>()?;
    let finite = predictions.iter().all(|p| match p {
        Prediction::Regression(y) => all_finite(y.iter()),
        Prediction::Classification(y) => y.iter().all(|x| x.is_finite()),
    });
    if !finite {
        return Err(Error::NonFinite("model output".into()));
    }
    let mut reg = (Vec::new(), Vec::new());
    let mut cls: (Vec<DVector<f64>>, Vec<DVector<f64>>) = (Vec::new(), Vec::new());
    for (p, s) in predictions.into_iter().zip(samples) {
        match (p, &s.target) {
            (Prediction::Regression(y), Target::Forecast { next, .. }) => {
                reg.0.push(y);
                reg.1.push(next.clone());
            }
            (Prediction::Classification(y), Target::Labels(l)) => {
                cls.0.push(y);
                cls.1.push(l.clone());
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "sample target does not match model head".into(),
                ))
            }
        }
    }
    if cls.0.is_empty() {
        regression_metrics(&reg.0, &reg.1, Some(baseline))
    } else {
        classification_metrics(&cls.0, &cls.1, threshold)
    }
}

/// A trained model with its held-out scores.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub model: StgcnModel,
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
    pub split: Split,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// Train a fresh network on the scenario's train split and score it.
pub fn train_and_evaluate(cfg: &RunConfig, scenario: &Scenario) -> Result<ExperimentOutcome> {
    let (samples, baseline) = scenario.samples(cfg.task)?;
    let times: Vec<usize> = scenario.dataset.samples.iter().map(|s| s.t).collect();
    let split = time_split(&times, cfg.window, cfg.horizon)?;
    let tcfg = cfg.train_config();
    let ctx = LossContext::new(
        &scenario.model.y,
        &scenario.op.observed,
        tcfg.mu2,
        tcfg.normalize_gso,
    )?;
    let mut init = StgcnModel::init(
        cfg.model_config(scenario.model.node_count),
        cfg.seeds().init,
    )?;
    if cfg.standardize {
        init.set_scaling(Some(Scaling::fit(
            split.train.iter().map(|&i| &samples[i].window),
        )?))?;
    }
    let outcome = train(
        init,
        &ctx,
        &pick(&samples, &split.train),
        &pick(&samples, &split.val),
        &tcfg,
    )?;
    let score = |idx: &[usize]| {
        evaluate(
            &outcome.model,
            &ctx,
            &pick(&samples, idx),
            &pick(&baseline, idx),
            cfg.threshold,
        )
    };
    let validation = score(&split.val)?;
    let test = score(&split.test)?;
    Ok(ExperimentOutcome {
        best_epoch: outcome.best_epoch,
        trace: outcome.trace,
        model: outcome.model,
        split,
        validation,
        test,
    })
}

/// Score a trained model on a scenario's test split, using the scenario's
/// own admittance matrix as the shift operator.
pub fn evaluate_scenario(
    cfg: &RunConfig,
    model: &StgcnModel,
    scenario: &Scenario,
) -> Result<MetricsReport> {
    let (samples, baseline) = scenario.samples(cfg.task)?;
    let times: Vec<usize> = scenario.dataset.samples.iter().map(|s| s.t).collect();
    let split = time_split(&times, cfg.window, cfg.horizon)?;
    let tcfg = cfg.train_config();
    let ctx = LossContext::new(
        &scenario.model.y,
        &scenario.op.observed,
        tcfg.mu2,
        model.config().normalize_gso,
    )?;
    evaluate(
        model,
        &ctx,
        &pick(&samples, &split.test),
        &pick(&baseline, &split.test),
        cfg.threshold,
    )
}

/// One-call experiment: place meters, simulate, train, score.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (_, model) = cfg.load_grid()?;
    let plan = sensor_plan(cfg, &model)?;
    let scenario = Scenario::build(cfg, model, &plan.sorted_buses())?;
    train_and_evaluate(cfg, &scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::GridSource;

    fn tiny(task: Task) -> RunConfig {
        let mut cfg = RunConfig {
            grid: GridSource::Synthetic {
                nodes: 8,
                extra: 3,
                seed: 2,
            },
            task,
            steps: 80,
            modes: 3,
            sensors: 5,
            window: 3,
            order: 2,
            temporal_channels: 3,
            graph_channels: 4,
            hidden: vec![8],
            ..RunConfig::default()
        };
        cfg.attack.size = 3;
        cfg.attack.pool = 2;
        cfg.train.epochs = 3;
        cfg
    }

    #[test]
    fn split_is_time_disjoint() {
        let times: Vec<usize> = (9..109).collect();
        let s = time_split(&times, 10, 2).unwrap();
        assert_eq!(s.train.len(), 70);
        let last_train = times[*s.train.last().unwrap()];
        let first_val = times[s.val[0]];
        assert!(first_val + 1 - 10 > last_train + 2);
        let first_test = times[s.test[0]];
        assert!(first_test + 1 - 10 > times[*s.val.last().unwrap()] + 2);
        assert_eq!(s.test.last(), Some(&99));
        assert!(time_split(&times[..3], 10, 0).is_err());
        assert!(time_split(&[3, 2], 1, 0).is_err());
    }

    #[test]
    fn tiny_runs_are_deterministic() {
        for task in [Task::Pssf, Task::Fdi] {
            let a = run_experiment(&tiny(task)).unwrap();
            let b = run_experiment(&tiny(task)).unwrap();
            assert_eq!(a.test, b.test);
            assert_eq!(a.model.params(), b.model.params());
            match task {
                Task::Pssf => {
                    assert!(a.test.mse.unwrap().is_finite() && a.test.baseline_mse.is_some())
                }
                Task::Fdi => assert!(a.test.accuracy.is_some()),
            }
        }
    }

    #[test]
    fn clean_localization_data_has_no_positive_labels() {
        let mut cfg = tiny(Task::Fdi);
        cfg.attack_mode = AttackMode::Clean;
        let out = run_experiment(&cfg).unwrap();
        let c = out.test.confusion.unwrap();
        assert_eq!(c.tp + c.fn_, 0);
        assert_eq!(out.test.accuracy.unwrap(), c.tn as f64 / c.total() as f64);
        assert_eq!(out.test.precision, Some(0.0));
        assert!(!out.test.flags.is_empty());
    }
}
