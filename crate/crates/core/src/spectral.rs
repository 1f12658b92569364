//! Spectral analysis of complex symmetric shift operators.
//!
//! For `S = S^T` with distinct eigenvalues the eigenvectors can be scaled so
//! that `U^T U = I` (a complex-orthogonal, not unitary, basis) and
//! `S = U Λ U^T`. The graph Fourier transform is then `x̃ = U^T x`. Graph
//! frequencies are the eigenvalue moduli, stored in ascending order.
//!
//! The ε-pseudospectral radius is computed on rays from the origin: along each
//! ray the outermost point with `σ_min(zI - S) <= ε` is bracketed and bisected,
//! and the best ray is then refined locally in angle.

use nalgebra::Schur;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    relative_asymmetry, sigma_max, sigma_min, spectral_radius, CMatrix, CVector, ZERO,
};
use crate::serial::ComplexPlanes;

/// Largest `||S - S^T||_F / ||S||_F` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Smallest `|v^T v|` (for unit `v`) accepted before normalization.
pub const QUASI_NULL_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    /// Eigenvalues sorted by modulus, ties broken by argument.
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`, scaled so `u^T u = 1`.
    pub u: CMatrix,
    /// `ordering[k]` is the position of eigenpair `k` in Schur order.
    pub ordering: Vec<usize>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Graph frequencies `|λ_k|`, nondecreasing.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.norm()).collect()
    }

    /// `U Λ U^T`.
    pub fn reconstruct(&self) -> CMatrix {
        let lambda = CMatrix::from_diagonal(&CVector::from_vec(self.eigenvalues.clone()));
        &self.u * lambda * self.u.transpose()
    }

    /// `||U^T U - I||_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.len();
        (self.u.transpose() * &self.u - CMatrix::identity(n, n)).norm()
    }

    /// Columns of `U` belonging to the `count` lowest graph frequencies.
    pub fn lowest(&self, count: usize) -> CMatrix {
        self.u.columns(0, count.min(self.len())).into_owned()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BasisFile {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            u: ComplexPlanes::from_matrix(&self.u),
            ordering: self.ordering.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<SpectralBasis> {
        let file: BasisFile = serde_json::from_str(text)?;
        let u = file.u.to_matrix()?;
        if u.nrows() != u.ncols() || u.ncols() != file.eigenvalues.len() {
            return Err(Error::Dimension(
                "basis matrix does not match eigenvalue count".into(),
            ));
        }
        Ok(SpectralBasis {
            eigenvalues: file
                .eigenvalues
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
            u,
            ordering: file.ordering,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BasisFile {
    eigenvalues: Vec<[f64; 2]>,
    u: ComplexPlanes,
    ordering: Vec<usize>,
}

/// Eigendecomposition `S = U Λ U^T` of a complex symmetric matrix.
pub fn spectral_decompose(s: &CMatrix) -> Result<SpectralBasis> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(Error::Dimension(format!(
            "{}x{} shift operator",
            n,
            s.ncols()
        )));
    }
    let asym = relative_asymmetry(s);
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(SpectralBasis {
            eigenvalues: Vec::new(),
            u: CMatrix::zeros(0, 0),
            ordering: Vec::new(),
        });
    }
    let schur = Schur::try_new(s.clone(), f64::EPSILON, 0).ok_or(Error::Singular("schur"))?;
    let (q, t) = schur.unpack();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;

    let mut vectors = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        // Eigenvector of the triangular factor by back-substitution.
        let mut y = CVector::zeros(n);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = ZERO;
            for k in (j + 1)..=i {
                acc += t[(j, k)] * y[k];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[j] = -acc / denom;
        }
        let mut v = &q * y;
        v /= Complex64::new(v.norm(), 0.0);
        let vtv: Complex64 = v.iter().map(|z| z * z).sum();
        if vtv.norm() < QUASI_NULL_THRESHOLD {
            return Err(Error::DegenerateBasis {
                index: i,
                norm: vtv.norm(),
            });
        }
        v /= vtv.sqrt();
        vectors.push(v);
        values.push(lambda);
    }

    let mut ordering: Vec<usize> = (0..n).collect();
    ordering.sort_by(|&a, &b| {
        values[a]
            .norm()
            .total_cmp(&values[b].norm())
            .then(values[a].arg().total_cmp(&values[b].arg()))
    });
    let mut u = CMatrix::zeros(n, n);
    for (k, &src) in ordering.iter().enumerate() {
        u.set_column(k, &vectors[src]);
    }
    Ok(SpectralBasis {
        eigenvalues: ordering.iter().map(|&k| values[k]).collect(),
        u,
        ordering,
    })
}

/// Graph Fourier transform `U^T x`.
pub fn gft(basis: &SpectralBasis, x: &CVector) -> Result<CVector> {
    check_len(basis, x.len())?;
    Ok(basis.u.tr_mul(x))
}

/// Inverse graph Fourier transform `U x̃`.
pub fn igft(basis: &SpectralBasis, x_hat: &CVector) -> Result<CVector> {
    check_len(basis, x_hat.len())?;
    Ok(&basis.u * x_hat)
}

fn check_len(basis: &SpectralBasis, len: usize) -> Result<()> {
    if len != basis.len() {
        return Err(Error::Dimension(format!(
            "signal of length {len} for a basis of size {}",
            basis.len()
        )));
    }
    Ok(())
}

/// Resolution settings for [`pseudospectral_radius`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PseudospectrumQuery {
    pub eps: f64,
    /// Number of uniformly spaced rays (eigenvalue directions are always added).
    pub angles: usize,
    /// Radial steps used to bracket the outermost crossing on each ray.
    pub radial_steps: usize,
    /// Target accuracy of the returned radius.
    pub tol: f64,
}

impl PseudospectrumQuery {
    pub fn new(eps: f64) -> Self {
        PseudospectrumQuery {
            eps,
            angles: 128,
            radial_steps: 48,
            tol: 1e-8,
        }
    }
}

/// ε-pseudospectral radius `max{|z| : σ_min(zI - S) <= ε}`.
///
/// The result is an outer estimate: it never falls below `ρ(S) + ε` and
/// exceeds the true radius by at most about `tol` (plus angular resolution).
pub fn pseudospectral_radius(s: &CMatrix, query: &PseudospectrumQuery) -> Result<f64> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(Error::Dimension(format!("{}x{} matrix", n, s.ncols())));
    }
    if !(query.eps >= 0.0) || !(query.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pseudospectrum query eps={} tol={}",
            query.eps, query.tol
        )));
    }
    let eigs = crate::linalg::eigenvalues(s)?;
    let rho = spectral_radius(s)?;
    if query.eps == 0.0 || n == 0 {
        return Ok(rho);
    }
    let eps = query.eps;
    let r_hi = sigma_max(s) + eps;
    let r_lo = (rho - eps).max(0.0);
    let h = ((r_hi - r_lo) / query.radial_steps.max(1) as f64).min(eps);

    let inside = |r: f64, theta: f64| -> bool {
        let z = Complex64::from_polar(r, theta);
        let mut m = -s.clone();
        for i in 0..n {
            m[(i, i)] += z;
        }
        sigma_min(&m) <= eps
    };
    // Outermost crossing along a ray, returned as its outside bracket end.
    let outermost = |theta: f64| -> f64 {
        let mut r = r_hi;
        while r > r_lo {
            let next = (r - h).max(r_lo);
            if inside(next, theta) {
                let (mut a, mut b) = (next, r);
                while b - a > query.tol {
                    let mid = 0.5 * (a + b);
                    if inside(mid, theta) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return b;
            }
            r = next;
        }
        0.0
    };

    let mut thetas: Vec<f64> = (0..query.angles)
        .map(|k| std::f64::consts::TAU * k as f64 / query.angles as f64)
        .collect();
    thetas.extend(eigs.iter().filter(|l| l.norm() > 0.0).map(|l| l.arg()));
    let radii: Vec<f64> = thetas.par_iter().map(|&th| outermost(th)).collect();
    let (mut best_theta, mut best) = thetas.iter().zip(radii.iter()).fold(
        (0.0, 0.0),
        |acc, (&th, &r)| if r > acc.1 { (th, r) } else { acc },
    );

    // Local angular refinement around the best ray.
    let mut step = std::f64::consts::TAU / query.angles.max(1) as f64;
    while step > 1e-7 {
        let mut moved = false;
        for th in [best_theta - step, best_theta + step] {
            let r = outermost(th);
            if r > best {
                best = r;
                best_theta = th;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best.max(rho + eps).min(r_hi + query.tol))
}
