use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::LayerGso;
use super::loss::{
    loss_forecast, loss_forecast_grad, loss_localization, loss_localization_grad, PhysicsTerm,
};
use super::model::{GradientSet, Prediction, StgcnModel};
use crate::error::{Error, Result};
use crate::linalg::{rng, CMatrix, CVector};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Weight of the power-consistency term in the forecasting loss.
    pub mu2: f64,
    pub normalize_gso: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            mu2: 0.0,
            normalize_gso: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.adam_eps > 0.0)
        {
            return Err(Error::InvalidArgument(
                "Adam moments need beta in [0,1) and eps > 0".into(),
            ));
        }
        if !(self.mu2 >= 0.0) {
            return Err(Error::InvalidArgument("mu2 must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Next voltage state, with the measured power on the observed buses
    /// when the physics term is active.
    Forecast {
        next: CVector,
        measured_power: Option<CVector>,
    },
    Labels(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub window: CMatrix,
    pub target: Target,
}

/// Data shared by every sample's loss.
#[derive(Debug, Clone)]
pub struct LossContext {
    pub gso: LayerGso,
    /// Raw shift operator for the physics term.
    pub s: CMatrix,
    pub observed: Vec<usize>,
    pub mu2: f64,
}

impl LossContext {
    pub fn new(s: &CMatrix, observed: &[usize], mu2: f64, normalize_gso: bool) -> Result<Self> {
        Ok(LossContext {
            gso: LayerGso::new(s, normalize_gso)?,
            s: s.clone(),
            observed: observed.to_vec(),
            mu2,
        })
    }

    fn physics(&self, measured: &Option<CVector>) -> Result<Option<PhysicsTerm>> {
        match measured {
            Some(p) if self.mu2 > 0.0 => Ok(Some(PhysicsTerm::from_power(
                &self.s,
                &self.observed,
                p.clone(),
                self.mu2,
            )?)),
            _ => Ok(None),
        }
    }
}

pub fn sample_loss(model: &StgcnModel, ctx: &LossContext, sample: &Sample) -> Result<f64> {
    let y = model.predict(&ctx.gso, &sample.window)?;
    match (&y, &sample.target) {
        (
            Prediction::Regression(y),
            Target::Forecast {
                next,
                measured_power,
            },
        ) => loss_forecast(y, next, ctx.physics(measured_power)?.as_ref()),
        (Prediction::Classification(y), Target::Labels(l)) => loss_localization(y, l),
        _ => Err(Error::InvalidArgument(
            "sample target does not match model head".into(),
        )),
    }
}

pub fn sample_loss_and_grad(
    model: &StgcnModel,
    ctx: &LossContext,
    sample: &Sample,
) -> Result<(f64, GradientSet)> {
    let cache = model.forward(&ctx.gso, &sample.window)?;
    let (loss, upstream) = match (&cache.output, &sample.target) {
        (
            Prediction::Regression(y),
            Target::Forecast {
                next,
                measured_power,
            },
        ) => {
            let phys = ctx.physics(measured_power)?;
            (
                loss_forecast(y, next, phys.as_ref())?,
                Prediction::Regression(loss_forecast_grad(y, next, phys.as_ref())?),
            )
        }
        (Prediction::Classification(y), Target::Labels(l)) => (
            loss_localization(y, l)?,
            Prediction::Classification(loss_localization_grad(y, l)?),
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "sample target does not match model head".into(),
            ))
        }
    };
    Ok((loss, model.backward(&cache, &upstream)?))
}

/// Mean loss over a set of samples. Zero for an empty set.
pub fn mean_loss(model: &StgcnModel, ctx: &LossContext, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| sample_loss(model, ctx, s))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len() as f64)
}

/// Adam with moments kept per real scalar.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(scalars: usize, cfg: &TrainConfig) -> Self {
        Adam {
            m: vec![0.0; scalars],
            v: vec![0.0; scalars],
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the lowest validation loss (training loss if no validation set).
    pub model: StgcnModel,
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
}

/// Minibatch Adam. Batch gradients are summed in sample order so runs are
/// reproducible regardless of thread scheduling.
pub fn train(
    mut model: StgcnModel,
    ctx: &LossContext,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffler = rng(cfg.seed);
    let mut flat = model.params().to_flat();
    let mut adam = Adam::new(flat.len(), cfg);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best = (f64::INFINITY, 0, model.clone());

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffler);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(f64, GradientSet)> = batch
                .par_iter()
                .map(|&i| sample_loss_and_grad(&model, ctx, &train_set[i]))
                .collect::<Result<_>>()?;
            let scale = 1.0 / batch.len() as f64;
            let mut total = vec![0.0; flat.len()];
            for (loss, g) in &results {
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
                }
                epoch_loss += loss;
                for (t, x) in total.iter_mut().zip(g.to_flat()) {
                    *t += scale * x;
                }
            }
            adam.step(&mut flat, &total);
            if !flat.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "parameters after epoch {epoch} update"
                )));
            }
            model.params_mut().assign_flat(&flat)?;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = if val_set.is_empty() {
            mean_loss(&model, ctx, train_set)?
        } else {
            mean_loss(&model, ctx, val_set)?
        };
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "validation loss at epoch {epoch}"
            )));
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        }
        trace.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
    }
    let (_, best_epoch, best_model) = best;
    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        trace,
    })
}
