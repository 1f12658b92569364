use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundConstants, BoundKind};
use crate::error::{Error, Result};
use crate::grid::{AdmittanceModel, GridFile, ProfileParams};
use crate::nn::{HeadKind, StgcnConfig, TrainConfig};
use crate::sensing::{AttackMode, AttackParams};

/// Which learning problem `train`, `eval` and `transfer` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// State estimation (`horizon = 0`) or forecasting.
    Pssf,
    /// Attack localization over the metered buses.
    Fdi,
}

/// A grid file on disk, or a seeded synthetic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSource {
    File(PathBuf),
    Synthetic {
        nodes: usize,
        extra: usize,
        seed: u64,
    },
}

impl GridSource {
    /// 30-bus synthetic benchmark, identical to `data/grid30.json`.
    pub const BENCHMARK: GridSource = GridSource::Synthetic {
        nodes: 30,
        extra: 12,
        seed: 4,
    };

    pub fn load(&self) -> Result<GridFile> {
        match self {
            GridSource::File(path) => GridFile::load(path),
            GridSource::Synthetic { nodes, extra, seed } => {
                Ok(GridFile::synthetic(*nodes, *extra, *seed))
            }
        }
    }
}

/// Bound sweep settings for `verify-bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSweep {
    pub eps: Vec<f64>,
    pub orders: Vec<usize>,
    /// Synthetic graph sizes; empty means the configured grid.
    pub nodes: Vec<usize>,
    /// Number of seeds, counted up from the run seed.
    pub seeds: usize,
    pub trials: usize,
    pub kinds: Vec<BoundKind>,
    /// Unit-ball inputs per trial for layer bounds.
    pub inputs: usize,
    pub constants: BoundConstants,
}

impl Default for BoundSweep {
    fn default() -> Self {
        BoundSweep {
            eps: vec![0.01, 0.05, 0.1],
            orders: vec![1, 2, 4],
            nodes: Vec::new(),
            seeds: 2,
            trials: 100,
            kinds: vec![
                BoundKind::Transfer,
                BoundKind::Permutation,
                BoundKind::Gcn,
                BoundKind::Layer,
            ],
            inputs: 20,
            constants: BoundConstants::default(),
        }
    }
}

/// Everything a CLI run needs. Unset fields take desk-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSource,
    pub seed: u64,
    pub task: Task,
    /// Simulated time steps.
    pub steps: usize,
    pub profile: ProfileParams,
    /// Standard deviation of the additive complex meter noise.
    pub noise_sd: f64,
    /// Low-frequency modes `|K|` kept observable by the placement.
    pub modes: usize,
    /// Metered buses `|A|`.
    pub sensors: usize,
    /// Window length `T`.
    pub window: usize,
    /// Forecast horizon `H`.
    pub horizon: usize,
    /// Attack mode for the localization dataset.
    pub attack_mode: AttackMode,
    pub attack: AttackParams,
    /// Highest shift power `K` of the graph convolution.
    pub order: usize,
    pub temporal_channels: usize,
    pub graph_channels: usize,
    pub hidden: Vec<usize>,
    /// Center and scale windows on training statistics, and map regression
    /// outputs back to volts.
    pub standardize: bool,
    /// RLS regularization weight.
    pub mu1: f64,
    /// Power-consistency weight of the forecasting loss.
    pub mu2: f64,
    /// Decision threshold on localization scores.
    pub threshold: f64,
    pub train: TrainConfig,
    pub bounds: BoundSweep,
    /// Branch index tripped by `transfer`.
    pub trip_line: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSource::BENCHMARK,
            seed: 1,
            task: Task::Pssf,
            steps: 480,
            // Light enough that the 30-bus benchmark stays above ~0.85 p.u.
            profile: ProfileParams {
                base_load: 0.015,
                ..ProfileParams::default()
            },
            noise_sd: 2e-3,
            modes: 8,
            sensors: 15,
            window: 10,
            horizon: 0,
            attack_mode: AttackMode::Hybrid { rate: 0.5 },
            attack: AttackParams::default(),
            order: 5,
            temporal_channels: 10,
            graph_channels: 10,
            hidden: vec![64, 64],
            standardize: true,
            mu1: 1e-6,
            mu2: 1e-4,
            threshold: 0.5,
            train: TrainConfig::default(),
            bounds: BoundSweep::default(),
            trip_line: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parse a JSON config. Relative grid paths resolve against the config's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        if let GridSource::File(grid) = &mut cfg.grid {
            if grid.is_relative() {
                if let Some(dir) = path.parent() {
                    *grid = dir.join(&*grid);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.steps < self.window + self.horizon {
            return bad(format!(
                "{} steps cannot fill a window of {} plus horizon {}",
                self.steps, self.window, self.horizon
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} must lie in (0, 1)", self.threshold));
        }
        if !(self.mu1 >= 0.0)
            || !(self.mu2 >= 0.0)
            || !self.mu1.is_finite()
            || !self.mu2.is_finite()
        {
            return bad("mu1 and mu2 must be finite and non-negative".into());
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad(format!(
                "noise_sd {} must be finite and non-negative",
                self.noise_sd
            ));
        }
        if self.modes == 0 || self.sensors < self.modes {
            return bad(format!(
                "{} sensors cannot cover {} modes",
                self.sensors, self.modes
            ));
        }
        if let AttackMode::Hybrid { rate } = self.attack_mode {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("hybrid rate {rate} outside [0, 1]"));
            }
        }
        if self.attack.size > self.sensors {
            return bad(format!(
                "cannot compromise {} of {} sensors",
                self.attack.size, self.sensors
            ));
        }
        if let Some(e) = self.bounds.eps.iter().find(|e| !(**e >= 0.0 && **e < 1.0)) {
            return bad(format!("bound sweep eps {e} must lie in [0, 1)"));
        }
        if self.bounds.trials == 0 || self.bounds.seeds == 0 {
            return bad("bound sweep needs at least one seed and one trial".into());
        }
        self.train.validate()?;
        self.model_config(1).validate()
    }

    pub fn load_grid(&self) -> Result<(GridFile, AdmittanceModel)> {
        let file = self.grid.load()?;
        let model = file.to_model()?;
        Ok((file, model))
    }

    pub fn head(&self) -> HeadKind {
        match self.task {
            Task::Pssf => HeadKind::Regression,
            Task::Fdi => HeadKind::Classification,
        }
    }

    /// Network shape for a grid of `nodes` buses.
    pub fn model_config(&self, nodes: usize) -> StgcnConfig {
        let outputs = match self.task {
            Task::Pssf => nodes,
            Task::Fdi => self.sensors,
        };
        StgcnConfig {
            nodes,
            window: self.window,
            temporal_channels: self.temporal_channels,
            order: self.order,
            graph_channels: self.graph_channels,
            hidden: self.hidden.clone(),
            head: self.head(),
            outputs,
            normalize_gso: self.train.normalize_gso,
        }
    }

    /// Optimizer settings with the training seed tied to the run seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seeds().shuffle,
            mu2: match self.task {
                Task::Pssf => self.mu2,
                Task::Fdi => 0.0,
            },
            ..self.train.clone()
        }
    }

    /// Per-stage seeds derived from the run seed.
    pub fn seeds(&self) -> Seeds {
        let s = self.seed;
        Seeds {
            loads: s,
            readings: s.wrapping_add(1_000),
            init: s.wrapping_add(2_000),
            shuffle: s.wrapping_add(3_000),
        }
    }
}

/// Seeds used by each stage of a run, recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub loads: u64,
    pub readings: u64,
    pub init: u64,
    pub shuffle: u64,
}
