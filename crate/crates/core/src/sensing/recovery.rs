use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::MeasurementOperator;
use crate::linalg::{pseudo_inverse, CMatrix, CVector};

/// Singular values below this fraction of the largest are dropped.
pub const RLS_RCOND: f64 = 1e-12;

/// Precomputed regularized least-squares map `z -> x̂` in natural bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsOperator {
    /// `|V| x 2|A|`.
    pub matrix: CMatrix,
    pub mu1: f64,
}

impl RlsOperator {
    /// `x̂ = (H^H H + μ1 S)† H^H z`, with `S` given in natural order.
    pub fn new(op: &MeasurementOperator, s: &CMatrix, mu1: f64) -> Result<Self> {
        let n = op.node_count();
        if s.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{}x{} shift for {n} buses",
                s.nrows(),
                s.ncols()
            )));
        }
        if !(mu1 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mu1 = {mu1} must be non-negative"
            )));
        }
        let s_perm = CMatrix::from_fn(n, n, |i, j| s[(op.order[i], op.order[j])]);
        let gram = op.h.ad_mul(&op.h) + s_perm * Complex64::new(mu1, 0.0);
        let perm = pseudo_inverse(&gram, RLS_RCOND)? * op.h.adjoint();
        let mut matrix = CMatrix::zeros(n, perm.ncols());
        for (k, &bus) in op.order.iter().enumerate() {
            matrix.set_row(bus, &perm.row(k));
        }
        Ok(RlsOperator { matrix, mu1 })
    }

    pub fn recover(&self, z: &CVector) -> Result<CVector> {
        if z.len() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "{} readings for an operator expecting {}",
                z.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * z)
    }
}

/// One-shot recovery; see [`RlsOperator`].
pub fn rls_recover(
    z: &CVector,
    op: &MeasurementOperator,
    s: &CMatrix,
    mu1: f64,
) -> Result<CVector> {
    RlsOperator::new(op, s, mu1)?.recover(z)
}

/// Baseline estimate: measured voltages on observed buses, zero elsewhere.
pub fn zero_fill(z: &CVector, op: &MeasurementOperator) -> CVector {
    let mut v = CVector::zeros(op.node_count());
    let volts = op.voltages(z);
    for (k, &bus) in op.observed.iter().enumerate() {
        v[bus] = volts[k];
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{
        build_measurement_operator, solve_voltages, synth_load_series, GridFile, ProfileParams,
    };
    use crate::linalg::ONE;

    fn grid_voltages(n: usize, seed: u64) -> (crate::grid::AdmittanceModel, CVector) {
        let model = GridFile::synthetic(n, n / 3, seed).to_model().unwrap();
        let loads = synth_load_series(n, model.slack, 1, seed, &ProfileParams::default()).unwrap();
        let v = solve_voltages(&model, &loads.values.column(0).into_owned(), ONE).unwrap();
        (model, v)
    }

    #[test]
    fn full_noiseless_observation_is_exact() {
        let (model, v) = grid_voltages(10, 1);
        let all: Vec<usize> = (0..10).collect();
        let op = build_measurement_operator(&model, &all, 0.0).unwrap();
        let z = op.apply(&v).unwrap();
        let x = rls_recover(&z, &op, &model.y, 0.0).unwrap();
        assert!((x - &v).norm() <= 1e-9 * v.norm());
        assert_eq!(
            rls_recover(&CVector::zeros(20), &op, &model.y, 0.0).unwrap(),
            CVector::zeros(10)
        );
    }

    #[test]
    fn partial_observation_beats_zero_fill() {
        let (model, v) = grid_voltages(10, 2);
        let op = build_measurement_operator(&model, &[0, 2, 3, 5, 7, 8], 0.0).unwrap();
        let z = op.apply(&v).unwrap();
        let x = rls_recover(&z, &op, &model.y, 1e-6).unwrap();
        let zf = zero_fill(&z, &op);
        assert!((&x - &v).norm_squared() < (&zf - &v).norm_squared());
    }

    #[test]
    fn input_checks() {
        let (model, _) = grid_voltages(5, 3);
        let op = build_measurement_operator(&model, &[0, 1], 0.0).unwrap();
        assert!(RlsOperator::new(&op, &model.y, -1.0).is_err());
        assert!(RlsOperator::new(&op, &CMatrix::zeros(4, 4), 0.0).is_err());
        assert!(rls_recover(&CVector::zeros(3), &op, &model.y, 0.0).is_err());
    }
}
