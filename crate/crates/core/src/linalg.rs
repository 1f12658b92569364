//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Deterministic generator used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard circular complex Gaussian with E|z|^2 = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng))
}

/// Random complex symmetric (`S = S^T`) matrix.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    (&a + a.transpose()) * Complex64::new(0.5, 0.0)
}

/// Gaussian matrix rescaled so that its spectral norm equals `eps`.
pub fn perturbation_on_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, eps: f64) -> CMatrix {
    if eps == 0.0 {
        return CMatrix::zeros(n, n);
    }
    let e = random_matrix(rng, n, n);
    let norm = sigma_max(&e);
    e * Complex64::new(eps / norm, 0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn sigma_max(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a (possibly rectangular) matrix.
pub fn sigma_min(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Eigenvalues of a general complex square matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::Singular("schur"))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max))
}

/// Moore-Penrose pseudo-inverse discarding singular values below `rcond * sigma_max`.
pub fn pseudo_inverse(m: &CMatrix, rcond: f64) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(CMatrix::zeros(cols, rows));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or(Error::Singular("svd u"))?;
    let v_t = svd.v_t.as_ref().ok_or(Error::Singular("svd v_t"))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rcond * smax;
    let mut out = CMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let vk = v_t.row(k).adjoint();
        let uk = u.column(k).adjoint();
        out += (vk * uk) * Complex64::new(1.0 / s, 0.0);
    }
    Ok(out)
}

/// Orthonormal basis (columns) of the numerical null space: right singular
/// vectors whose singular value is at most `rtol * sigma_max`.
pub fn null_space(m: &CMatrix, rtol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return CMatrix::identity(cols, cols);
    }
    // Pad to square so that the SVD returns a full right basis.
    let mut padded = CMatrix::zeros(rows.max(cols), cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= rtol * smax || smax == 0.0)
        .collect();
    let mut basis = CMatrix::zeros(cols, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        basis.set_column(j, &v_t.row(k).adjoint());
    }
    basis
}

/// `||A - A^T||_F / ||A||_F` (zero for the zero matrix).
pub fn relative_asymmetry(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Infinity norm of a complex vector.
pub fn inf_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> bool {
    values
        .into_iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Select the listed rows and columns of `m`.
pub fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}
