use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{solve_voltages, AdmittanceModel};
use crate::error::{Error, Result};
use crate::linalg::{rng, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Voltage,
    Current,
    Injection,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Voltage => "voltage",
            Quantity::Current => "current",
            Quantity::Injection => "injection",
        }
    }

    pub fn parse(s: &str) -> Option<Quantity> {
        match s {
            "voltage" => Some(Quantity::Voltage),
            "current" => Some(Quantity::Current),
            "injection" => Some(Quantity::Injection),
            _ => None,
        }
    }
}

/// Bus phasors over time: column `t` holds the complex value at every bus.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorSeries {
    pub values: CMatrix,
    pub quantity: Quantity,
    /// Sampling interval in hours.
    pub step_hours: f64,
}

impl PhasorSeries {
    pub fn new(values: CMatrix, quantity: Quantity, step_hours: f64) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "phasor series needs at least one step".into(),
            ));
        }
        if !crate::linalg::all_finite(&values) {
            return Err(Error::NonFinite("phasor series entry".into()));
        }
        Ok(PhasorSeries {
            values,
            quantity,
            step_hours,
        })
    }

    pub fn steps(&self) -> usize {
        self.values.ncols()
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }
}

/// Shape of the synthetic demand profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileParams {
    /// Mean active demand per bus, per-unit.
    pub base_load: f64,
    /// Relative spread of per-bus base demand around `base_load`.
    pub bus_spread: f64,
    /// Relative amplitude of the daily sinusoid.
    pub daily_amplitude: f64,
    pub steps_per_day: usize,
    /// AR(1) coefficient of the demand noise.
    pub ar_coefficient: f64,
    /// Stationary relative standard deviation of the demand noise.
    pub noise_sd: f64,
    /// Reactive-to-active ratio (tan of the power-factor angle).
    pub reactive_ratio: f64,
    /// Upper clamp on the demand multiplier.
    pub max_multiplier: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            base_load: 0.03,
            bus_spread: 0.5,
            daily_amplitude: 0.3,
            steps_per_day: 24,
            ar_coefficient: 0.8,
            noise_sd: 0.1,
            reactive_ratio: 0.3,
            max_multiplier: 2.0,
        }
    }
}

/// Seeded demand series: daily sinusoid per bus plus AR(1) noise. Demand is a
/// negative injection; the slack row stays zero.
pub fn synth_load_series(
    node_count: usize,
    slack: usize,
    steps: usize,
    seed: u64,
    params: &ProfileParams,
) -> Result<PhasorSeries> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let mut r = rng(seed);
    let base: Vec<f64> = (0..node_count)
        .map(|_| params.base_load * (1.0 + params.bus_spread * r.random_range(-1.0..=1.0)))
        .collect();
    let phase: Vec<f64> = (0..node_count)
        .map(|_| r.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let innovation_sd = params.noise_sd * (1.0 - params.ar_coefficient.powi(2)).max(0.0).sqrt();
    let normal = Normal::new(0.0, innovation_sd.max(0.0)).expect("finite sd");
    let mut noise = vec![0.0; node_count];
    let period = params.steps_per_day.max(1) as f64;

    let mut values = CMatrix::zeros(node_count, steps);
    for t in 0..steps {
        for bus in 0..node_count {
            noise[bus] = params.ar_coefficient * noise[bus]
                + if innovation_sd > 0.0 {
                    normal.sample(&mut r)
                } else {
                    0.0
                };
            if bus == slack {
                continue;
            }
            let daily = params.daily_amplitude
                * (std::f64::consts::TAU * t as f64 / period + phase[bus]).sin();
            let mult = (1.0 + daily + noise[bus]).clamp(0.0, params.max_multiplier);
            let p = base[bus] * mult;
            values[(bus, t)] = -Complex64::new(p, p * params.reactive_ratio);
        }
    }
    PhasorSeries::new(values, Quantity::Injection, 24.0 / period)
}

/// Run one power flow per step, returning (voltages, currents).
pub fn simulate_phasors(
    model: &AdmittanceModel,
    injections: &PhasorSeries,
    slack_voltage: Complex64,
) -> Result<(PhasorSeries, PhasorSeries)> {
    if injections.node_count() != model.node_count {
        return Err(Error::Dimension(format!(
            "injection series has {} buses, grid has {}",
            injections.node_count(),
            model.node_count
        )));
    }
    let steps = injections.steps();
    let mut v = CMatrix::zeros(model.node_count, steps);
    for t in 0..steps {
        let col = solve_voltages(
            model,
            &injections.values.column(t).into_owned(),
            slack_voltage,
        )?;
        v.set_column(t, &col);
    }
    let i = &model.y * &v;
    Ok((
        PhasorSeries::new(v, Quantity::Voltage, injections.step_hours)?,
        PhasorSeries::new(i, Quantity::Current, injections.step_hours)?,
    ))
}
