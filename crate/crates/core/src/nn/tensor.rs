use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, Dyn, OMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Complex array stored as separate real and imaginary planes (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTensor {
    pub shape: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if re.len() != len || im.len() != len {
            return Err(Error::Dimension(format!(
                "tensor of shape {shape:?} with planes of length {}/{}",
                re.len(),
                im.len()
            )));
        }
        if !re.iter().chain(im.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("tensor entry".into()));
        }
        Ok(ComplexTensor { shape, re, im })
    }

    pub fn from_values(shape: Vec<usize>, values: &[Complex64]) -> Result<Self> {
        Self::new(
            shape,
            values.iter().map(|z| z.re).collect(),
            values.iter().map(|z| z.im).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, flat: usize) -> Complex64 {
        Complex64::new(self.re[flat], self.im[flat])
    }

    pub fn values(&self) -> Vec<Complex64> {
        (0..self.len()).map(|k| self.get(k)).collect()
    }

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
        ComplexTensor {
            shape: vec![rows, cols],
            re,
            im,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let [rows, cols] = self.shape[..] else {
            return Err(Error::Dimension(format!(
                "shape {:?} is not a matrix",
                self.shape
            )));
        };
        Ok(CMatrix::from_fn(rows, cols, |i, j| self.get(i * cols + j)))
    }

    /// Elementwise [`crelu`].
    pub fn crelu(&self) -> ComplexTensor {
        ComplexTensor {
            shape: self.shape.clone(),
            re: self.re.iter().map(|&x| x.max(0.0)).collect(),
            im: self.im.iter().map(|&x| x.max(0.0)).collect(),
        }
    }
}

/// `ReLU(Re z) + j ReLU(Im z)`.
pub fn crelu(z: Complex64) -> Complex64 {
    Complex64::new(z.re.max(0.0), z.im.max(0.0))
}

pub fn crelu_matrix(m: &CMatrix) -> CMatrix {
    m.map(crelu)
}

/// Backpropagate through CReLU; the subgradient at zero is zero on each part.
pub(crate) fn crelu_backward<C: Dim>(
    pre: &OMatrix<Complex64, Dyn, C>,
    upstream: &OMatrix<Complex64, Dyn, C>,
) -> OMatrix<Complex64, Dyn, C>
where
    DefaultAllocator: Allocator<Dyn, C>,
{
    pre.zip_map(upstream, |p, g| {
        Complex64::new(
            if p.re > 0.0 { g.re } else { 0.0 },
            if p.im > 0.0 { g.im } else { 0.0 },
        )
    })
}

/// `tanh(Re z) + j tanh(Im z)`.
pub fn split_tanh(z: Complex64) -> Complex64 {
    Complex64::new(z.re.tanh(), z.im.tanh())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn crelu_examples() {
        assert_eq!(crelu(c(1.0, 1.0)), c(1.0, 1.0));
        assert_eq!(crelu(c(-1.0, 2.0)), c(0.0, 2.0));
        assert_eq!(crelu(c(-3.0, -4.0)), c(0.0, 0.0));
        let t = ComplexTensor::from_values(vec![3], &[c(1.0, 1.0), c(-1.0, 2.0), c(-3.0, -4.0)])
            .unwrap();
        assert_eq!(
            t.crelu().values(),
            vec![c(1.0, 1.0), c(0.0, 2.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn tensor_shape_checks() {
        assert!(ComplexTensor::new(vec![2, 2], vec![0.0; 3], vec![0.0; 4]).is_err());
        assert!(ComplexTensor::new(vec![1], vec![f64::NAN], vec![0.0]).is_err());
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        assert_eq!(ComplexTensor::from_matrix(&m).to_matrix().unwrap(), m);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn crelu_is_non_expansive(a in -1e3f64..1e3, b in -1e3f64..1e3, c2 in -1e3f64..1e3, d in -1e3f64..1e3) {
            let z1 = c(a, b);
            let z2 = c(c2, d);
            prop_assert!((crelu(z1) - crelu(z2)).norm() <= (z1 - z2).norm() + 1e-12);
        }

        #[test]
        fn crelu_is_positively_homogeneous(a in -10f64..10.0, b in -10f64..10.0, s in 1e-3f64..1e3) {
            let z = c(a, b);
            prop_assert!((crelu(z * s) - crelu(z) * s).norm() <= 1e-12 * s.max(1.0) * z.norm().max(1.0));
        }
    }
}
