//! JSON-friendly storage of complex arrays as separate real and imaginary planes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Row-major complex matrix split into real and imaginary planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexPlanes {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexPlanes {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        ComplexPlanes { rows, cols, re, im }
    }

    pub fn from_vector(v: &CVector) -> Self {
        ComplexPlanes {
            rows: v.len(),
            cols: 1,
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let len = self.rows * self.cols;
        if self.re.len() != len || self.im.len() != len {
            return Err(Error::Dimension(format!(
                "planes of length {}/{} for a {}x{} matrix",
                self.re.len(),
                self.im.len(),
                self.rows,
                self.cols
            )));
        }
        if !self.re.iter().chain(self.im.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("stored plane entry".into()));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            Complex64::new(self.re[k], self.im[k])
        }))
    }

    pub fn to_vector(&self) -> Result<CVector> {
        let m = self.to_matrix()?;
        Ok(CVector::from_iterator(
            m.len(),
            m.transpose().iter().copied(),
        ))
    }
}

/// Flatten complex values to `[re, im, re, im, ...]`.
pub fn interleave(values: impl IntoIterator<Item = Complex64>) -> Vec<f64> {
    values.into_iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`interleave`].
pub fn deinterleave(flat: &[f64]) -> Result<Vec<Complex64>> {
    if flat.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "odd interleaved length {}",
            flat.len()
        )));
    }
    Ok(flat
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect())
}
