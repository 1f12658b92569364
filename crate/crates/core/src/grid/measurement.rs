use rand::Rng;

use super::AdmittanceModel;
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, rng, submatrix, CMatrix, CVector, ONE};

/// Linear map from the bus-voltage state to stacked current and voltage
/// readings at the metered buses.
///
/// The matrix is laid out in the permuted frame `x = [v_A; v_U]`; `order`
/// lists the natural bus index at each permuted position.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    pub observed: Vec<usize>,
    pub unobserved: Vec<usize>,
    pub order: Vec<usize>,
    pub h: CMatrix,
    pub noise_sd: f64,
}

impl MeasurementOperator {
    pub fn node_count(&self) -> usize {
        self.order.len()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.len()
    }

    /// Reorder a natural-order bus vector into `[x_A; x_U]`.
    pub fn permute(&self, v: &CVector) -> CVector {
        CVector::from_fn(self.order.len(), |k, _| v[self.order[k]])
    }

    /// Inverse of [`permute`](Self::permute).
    pub fn unpermute(&self, x: &CVector) -> CVector {
        let mut v = CVector::zeros(self.order.len());
        for (k, &bus) in self.order.iter().enumerate() {
            v[bus] = x[k];
        }
        v
    }

    /// The operator with columns in natural bus order, so `z = H_nat v`.
    pub fn natural_matrix(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.h.nrows(), self.h.ncols());
        for (k, &bus) in self.order.iter().enumerate() {
            out.set_column(bus, &self.h.column(k));
        }
        out
    }

    /// Noise-free readings `H v` for natural-order voltages.
    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "state of length {} for operator over {} buses",
                v.len(),
                self.node_count()
            )));
        }
        Ok(&self.h * self.permute(v))
    }

    /// Current readings (first half of `z`).
    pub fn currents<'a>(
        &self,
        z: &'a CVector,
    ) -> nalgebra::DVectorView<'a, num_complex::Complex64> {
        z.rows(0, self.observed.len())
    }

    /// Voltage readings (second half of `z`).
    pub fn voltages<'a>(
        &self,
        z: &'a CVector,
    ) -> nalgebra::DVectorView<'a, num_complex::Complex64> {
        z.rows(self.observed.len(), self.observed.len())
    }
}

/// Build `H = [[Y_AA, Y_AU], [I, 0]]` for the metered set `observed`.
pub fn build_measurement_operator(
    model: &AdmittanceModel,
    observed: &[usize],
    noise_sd: f64,
) -> Result<MeasurementOperator> {
    if observed.is_empty() {
        return Err(Error::InvalidArgument("observed bus set is empty".into()));
    }
    let n = model.node_count;
    let mut is_observed = vec![false; n];
    for &bus in observed {
        if bus >= n {
            return Err(Error::IndexOutOfRange {
                index: bus,
                node_count: n,
            });
        }
        if is_observed[bus] {
            return Err(Error::InvalidArgument(format!("bus {bus} listed twice")));
        }
        is_observed[bus] = true;
    }
    if noise_sd < 0.0 || !noise_sd.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sd {noise_sd}")));
    }
    let unobserved: Vec<usize> = (0..n).filter(|&i| !is_observed[i]).collect();
    let order: Vec<usize> = observed.iter().chain(unobserved.iter()).copied().collect();
    let a = observed.len();
    let mut h = CMatrix::zeros(2 * a, n);
    h.view_mut((0, 0), (a, n))
        .copy_from(&submatrix(&model.y, observed, &order));
    for k in 0..a {
        h[(a + k, k)] = ONE;
    }
    Ok(MeasurementOperator {
        observed: observed.to_vec(),
        unobserved,
        order,
        h,
        noise_sd,
    })
}

/// `z = H v + ε` with circular complex Gaussian noise, `E|ε|^2 = sd^2`.
pub fn observe(op: &MeasurementOperator, v: &CVector, seed: u64) -> Result<CVector> {
    let mut r = rng(seed);
    observe_with(op, v, &mut r)
}

pub fn observe_with<R: Rng + ?Sized>(
    op: &MeasurementOperator,
    v: &CVector,
    rng: &mut R,
) -> Result<CVector> {
    let mut z = op.apply(v)?;
    if op.noise_sd > 0.0 {
        for e in z.iter_mut() {
            *e += complex_normal(rng) * op.noise_sd;
        }
    }
    Ok(z)
}
