use std::io::{BufRead, Write};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attack::{choose_attack_set, make_labels, stealthy_attack};
use super::recovery::RlsOperator;
use crate::error::{Error, Result};
use crate::grid::{observe_with, AdmittanceModel, MeasurementOperator, PhasorSeries};
use crate::linalg::{rng, CMatrix, CVector};
use crate::serial::{deinterleave, interleave};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackMode {
    Clean,
    Attacked,
    /// Each window is attacked with probability `rate`.
    Hybrid {
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    /// `|C|`.
    pub size: usize,
    /// Peak perturbation magnitude (per unit).
    pub alpha: f64,
    /// Number of distinct compromised sets drawn for the dataset.
    pub pool: usize,
    pub max_tries: usize,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            size: 5,
            alpha: 0.1,
            pool: 8,
            max_tries: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    /// Window length `T`.
    pub window: usize,
    /// Forecast horizon `H` (0 for estimation).
    pub horizon: usize,
    pub mode: AttackMode,
    pub attack: AttackParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// One window of readings with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    /// Index of the last step in the window.
    pub t: usize,
    /// Readings `z_{t−T+1}, ..., z_t`.
    pub z: Vec<CVector>,
    /// True state `x_{t+H}`.
    pub target: CVector,
    /// Measured power `v̂_A ⊙ conj(î_A)` at `t + H` (unattacked readings).
    pub power: CVector,
    /// Attack indicator over the metered buses.
    pub labels: DVector<f64>,
    pub hypothesis: Hypothesis,
}

impl DatasetSample {
    /// Recovered state window `X̂` (`|V| x T`), one RLS estimate per step.
    pub fn recovered_window(&self, rls: &RlsOperator) -> Result<CMatrix> {
        let cols: Vec<CVector> = self
            .z
            .iter()
            .map(|z| rls.recover(z))
            .collect::<Result<_>>()?;
        Ok(CMatrix::from_columns(&cols))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<DatasetSample>,
    /// Compromised sets attacks were drawn from.
    pub attack_sets: Vec<Vec<usize>>,
}

fn per_sample_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Window a voltage series into measurement samples, injecting stealthy
/// attacks that persist across each attacked window.
pub fn build_dataset(
    voltages: &PhasorSeries,
    model: &AdmittanceModel,
    op: &MeasurementOperator,
    spec: &DatasetSpec,
    seed: u64,
) -> Result<Dataset> {
    let steps = voltages.steps();
    if spec.window == 0 {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    if steps < spec.window + spec.horizon {
        return Err(Error::InvalidArgument(format!(
            "series of {steps} steps is shorter than window {} plus horizon {}",
            spec.window, spec.horizon
        )));
    }
    if voltages.node_count() != op.node_count() {
        return Err(Error::Dimension(
            "series and operator disagree on bus count".into(),
        ));
    }
    if let AttackMode::Hybrid { rate } = spec.mode {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "hybrid rate {rate} outside [0, 1]"
            )));
        }
    }

    let mut noise = rng(seed);
    let readings: Vec<CVector> = (0..steps)
        .map(|t| observe_with(op, &voltages.values.column(t).into_owned(), &mut noise))
        .collect::<Result<_>>()?;

    let attacks_needed = spec.mode != AttackMode::Clean && spec.attack.size > 0;
    let mut attack_sets: Vec<Vec<usize>> = Vec::new();
    if attacks_needed {
        let mut r = rng(seed.wrapping_add(1));
        let mut draws = 0;
        while attack_sets.len() < spec.attack.pool.max(1) && draws < 20 * spec.attack.pool.max(1) {
            let set = choose_attack_set(
                model,
                &op.observed,
                spec.attack.size,
                &mut r,
                spec.attack.max_tries,
            )?;
            if !attack_sets.contains(&set) {
                attack_sets.push(set);
            }
            draws += 1;
        }
    }
    let h_nat = op.natural_matrix();
    let a = op.observed_count();

    let mut samples = Vec::with_capacity(steps - spec.window - spec.horizon + 1);
    for t in spec.window - 1..steps - spec.horizon {
        let mut r = rng(per_sample_seed(seed, t));
        let attacked = match spec.mode {
            AttackMode::Clean => false,
            AttackMode::Attacked => true,
            AttackMode::Hybrid { rate } => r.random::<f64>() < rate,
        };
        let mut z: Vec<CVector> = readings[t + 1 - spec.window..=t].to_vec();
        let mut labels = DVector::zeros(a);
        if attacked && attacks_needed {
            let set = &attack_sets[r.random_range(0..attack_sets.len())];
            let inst = stealthy_attack(model, &op.observed, set, spec.attack.alpha, r.random())?;
            let shift = &h_nat * &inst.delta;
            for zt in &mut z {
                *zt += &shift;
            }
            labels = make_labels(&inst.delta, &op.observed);
        }
        let future = &readings[t + spec.horizon];
        let power = CVector::from_fn(a, |k, _| {
            op.voltages(future)[k] * op.currents(future)[k].conj()
        });
        samples.push(DatasetSample {
            t,
            z,
            target: voltages.values.column(t + spec.horizon).into_owned(),
            power,
            labels,
            hypothesis: if attacked && attacks_needed {
                Hypothesis::H1
            } else {
                Hypothesis::H0
            },
        });
    }
    Ok(Dataset {
        samples,
        attack_sets,
    })
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    t: usize,
    /// Readings of the window, step by step, as `[re, im, ...]`.
    z: Vec<f64>,
    /// Readings per step.
    width: usize,
    target: Vec<f64>,
    power: Vec<f64>,
    labels: Vec<u8>,
    hypothesis: Hypothesis,
}

impl Dataset {
    /// One JSON object per sample per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.samples {
            let rec = SampleRecord {
                t: s.t,
                z: interleave(s.z.iter().flat_map(|zt| zt.iter().copied())),
                width: s.z.first().map_or(0, |zt| zt.len()),
                target: interleave(s.target.iter().copied()),
                power: interleave(s.power.iter().copied()),
                labels: s.labels.iter().map(|&l| l as u8).collect(),
                hypothesis: s.hypothesis,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Dataset> {
        let mut samples = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line)?;
            let flat = deinterleave(&rec.z)?;
            if rec.width == 0 || flat.len() % rec.width != 0 {
                return Err(Error::Dimension(format!(
                    "sample {} has ragged readings",
                    rec.t
                )));
            }
            let z = flat
                .chunks(rec.width)
                .map(CVector::from_column_slice)
                .collect();
            samples.push(DatasetSample {
                t: rec.t,
                z,
                target: CVector::from_vec(deinterleave(&rec.target)?),
                power: CVector::from_vec(deinterleave(&rec.power)?),
                labels: DVector::from_iterator(
                    rec.labels.len(),
                    rec.labels.iter().map(|&l| l as f64),
                ),
                hypothesis: rec.hypothesis,
            });
        }
        Ok(Dataset {
            samples,
            attack_sets: Vec::new(),
        })
    }

    pub fn attacked_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples
            .iter()
            .filter(|s| s.hypothesis == Hypothesis::H1)
            .count() as f64
            / self.samples.len() as f64
    }
}
