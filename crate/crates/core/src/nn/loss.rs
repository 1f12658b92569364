use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO};

/// Power-consistency penalty on the observed buses.
///
/// Compares the measured injections `v̂_A ⊙ conj(î_A)` against the ones implied
/// by a predicted voltage `y`, namely `[y ⊙ conj(S y)]_A`.
#[derive(Debug, Clone)]
pub struct PhysicsTerm {
    pub s: CMatrix,
    pub observed: Vec<usize>,
    pub measured_power: CVector,
    pub mu2: f64,
}

impl PhysicsTerm {
    pub fn new(
        s: &CMatrix,
        observed: &[usize],
        v_hat: &CVector,
        i_hat: &CVector,
        mu2: f64,
    ) -> Result<Self> {
        if v_hat.len() != observed.len() || i_hat.len() != observed.len() {
            return Err(Error::Dimension(format!(
                "{} observed buses with {} voltages and {} currents",
                observed.len(),
                v_hat.len(),
                i_hat.len()
            )));
        }
        Self::from_power(s, observed, v_hat.zip_map(i_hat, |v, i| v * i.conj()), mu2)
    }

    pub fn from_power(
        s: &CMatrix,
        observed: &[usize],
        measured_power: CVector,
        mu2: f64,
    ) -> Result<Self> {
        if !(mu2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "physics weight {mu2} must be non-negative"
            )));
        }
        if let Some(&bad) = observed.iter().find(|&&a| a >= s.nrows()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                node_count: s.nrows(),
            });
        }
        if measured_power.len() != observed.len() {
            return Err(Error::Dimension(
                "measured power length differs from observed set".into(),
            ));
        }
        Ok(PhysicsTerm {
            s: s.clone(),
            observed: observed.to_vec(),
            measured_power,
            mu2,
        })
    }

    /// `q - p` on the observed buses, and `S y` for reuse.
    fn mismatch(&self, y: &CVector) -> (CVector, CVector) {
        let sy = &self.s * y;
        let d = CVector::from_fn(self.observed.len(), |k, _| {
            let a = self.observed[k];
            y[a] * sy[a].conj() - self.measured_power[k]
        });
        (d, sy)
    }
}

fn check(y: &CVector, target: &CVector, physics: Option<&PhysicsTerm>) -> Result<()> {
    if y.len() != target.len() {
        return Err(Error::Dimension(format!(
            "prediction {} vs target {}",
            y.len(),
            target.len()
        )));
    }
    if let Some(p) = physics {
        if p.s.nrows() != y.len() {
            return Err(Error::Dimension(
                "physics term built for another grid size".into(),
            ));
        }
    }
    Ok(())
}

/// `‖y − x‖² + μ2 ‖v̂_A ⊙ conj(î_A) − [y ⊙ conj(S y)]_A‖²`.
pub fn loss_forecast(y: &CVector, target: &CVector, physics: Option<&PhysicsTerm>) -> Result<f64> {
    check(y, target, physics)?;
    let mut loss = (y - target).norm_squared();
    if let Some(p) = physics {
        if p.mu2 > 0.0 {
            loss += p.mu2 * p.mismatch(y).0.norm_squared();
        }
    }
    Ok(loss)
}

/// `∂L/∂Re y + j ∂L/∂Im y` for [`loss_forecast`].
pub fn loss_forecast_grad(
    y: &CVector,
    target: &CVector,
    physics: Option<&PhysicsTerm>,
) -> Result<CVector> {
    check(y, target, physics)?;
    let mut g = (y - target) * Complex64::new(2.0, 0.0);
    if let Some(p) = physics {
        if p.mu2 > 0.0 {
            let (d, sy) = p.mismatch(y);
            // With d = q − p: ∂L/∂ȳ = μ2 (S^H (1_A ⊙ y ⊙ d̄) + 1_A ⊙ d ⊙ S y).
            let mut masked = CVector::from_element(y.len(), ZERO);
            let mut local = CVector::from_element(y.len(), ZERO);
            for (k, &a) in p.observed.iter().enumerate() {
                masked[a] += y[a] * d[k].conj();
                local[a] += d[k] * sy[a];
            }
            let wirtinger = p.s.ad_mul(&masked) + local;
            g += wirtinger * Complex64::new(2.0 * p.mu2, 0.0);
        }
    }
    Ok(g)
}

/// `Σ (y_i − label_i)²`.
pub fn loss_localization(y: &DVector<f64>, labels: &DVector<f64>) -> Result<f64> {
    if y.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "prediction {} vs labels {}",
            y.len(),
            labels.len()
        )));
    }
    Ok((y - labels).norm_squared())
}

pub fn loss_localization_grad(y: &DVector<f64>, labels: &DVector<f64>) -> Result<DVector<f64>> {
    loss_localization(y, labels)?;
    Ok((y - labels) * 2.0)
}
