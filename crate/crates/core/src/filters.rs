//! Polynomial graph filters `H(S) = Σ_k h_k S^k` and graph-temporal filters
//! `w_t = Σ_τ Σ_k h_{k,τ} S^k x_{t-τ}`.
//!
//! Filters are applied by Horner recursion on the signal, so `S^k` is never
//! formed. Inputs before `t = 0` are taken as zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO};
use crate::serial::ComplexPlanes;
use crate::spectral::{gft, igft, SpectralBasis};

/// Coefficients `h_{k,t}`: row `k` is the shift power, column `t` the delay.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    coeffs: CMatrix,
}

impl FilterCoefficients {
    pub fn new(coeffs: CMatrix) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "filter needs K >= 0 and K_t >= 1".into(),
            ));
        }
        if !crate::linalg::all_finite(&coeffs) {
            return Err(Error::NonFinite("filter coefficient".into()));
        }
        Ok(FilterCoefficients { coeffs })
    }

    /// Pure spatial filter (`K_t = 1`).
    pub fn spatial(h: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::from_column_slice(h.len(), 1, h))
    }

    /// Spatial order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    /// Temporal length `K_t`.
    pub fn temporal_len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.coeffs
    }

    /// Spatial taps `h_{·,t}` at delay `t`.
    pub fn taps(&self, t: usize) -> Vec<Complex64> {
        self.coeffs.column(t).iter().copied().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FilterFile {
            coeffs: ComplexPlanes::from_matrix(&self.coeffs),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FilterFile = serde_json::from_str(text)?;
        Self::new(file.coeffs.to_matrix()?)
    }
}

#[derive(Serialize, Deserialize)]
struct FilterFile {
    coeffs: ComplexPlanes,
}

fn check_square(s: &CMatrix, len: usize) -> Result<()> {
    if s.nrows() != s.ncols() || s.nrows() != len {
        return Err(Error::Dimension(format!(
            "{}x{} shift operator with signal length {len}",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(())
}

/// `w = Σ_k h_k S^k x` by Horner recursion.
pub fn apply_polynomial_filter(s: &CMatrix, h: &[Complex64], x: &CVector) -> Result<CVector> {
    check_square(s, x.len())?;
    let Some((last, rest)) = h.split_last() else {
        return Ok(CVector::zeros(x.len()));
    };
    let mut w = x * *last;
    for &hk in rest.iter().rev() {
        w = s * w + x * hk;
    }
    Ok(w)
}

/// Dense `H(S) = Σ_k h_k S^k` by Horner recursion on matrices.
pub fn filter_matrix(s: &CMatrix, h: &[Complex64]) -> Result<CMatrix> {
    let n = s.nrows();
    check_square(s, n)?;
    let Some((last, rest)) = h.split_last() else {
        return Ok(CMatrix::zeros(n, n));
    };
    let eye = CMatrix::identity(n, n);
    let mut acc = &eye * *last;
    for &hk in rest.iter().rev() {
        acc = s * acc + &eye * hk;
    }
    Ok(acc)
}

fn horner_scalar(h: &[Complex64], lambda: Complex64) -> Complex64 {
    h.iter().rev().fold(ZERO, |acc, &hk| acc * lambda + hk)
}

/// Frequency response `h̃(λ_i) = Σ_k h_k λ_i^k` at every graph frequency.
pub fn transfer_function(basis: &SpectralBasis, h: &[Complex64]) -> Vec<Complex64> {
    basis
        .eigenvalues
        .iter()
        .map(|&l| horner_scalar(h, l))
        .collect()
}

/// Filter in the spectral domain: `igft(h̃ ⊙ gft(x))`.
pub fn apply_spectral_filter(
    basis: &SpectralBasis,
    h: &[Complex64],
    x: &CVector,
) -> Result<CVector> {
    let response = transfer_function(basis, h);
    let mut xt = gft(basis, x)?;
    for (v, r) in xt.iter_mut().zip(response) {
        *v *= r;
    }
    igft(basis, &xt)
}

/// Causal graph-temporal filtering of a `|V| x T` series.
pub fn apply_temporal_graph_filter(
    s: &CMatrix,
    coeffs: &FilterCoefficients,
    series: &CMatrix,
) -> Result<CMatrix> {
    check_square(s, series.nrows())?;
    if series.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "series must have at least one step".into(),
        ));
    }
    let steps = series.ncols();
    let taps: Vec<Vec<Complex64>> = (0..coeffs.temporal_len()).map(|t| coeffs.taps(t)).collect();
    let mut out = CMatrix::zeros(series.nrows(), steps);
    for t in 0..steps {
        let mut acc = CVector::zeros(series.nrows());
        for (tau, h) in taps.iter().enumerate().take(t + 1) {
            let x = series.column(t - tau).into_owned();
            acc += apply_polynomial_filter(s, h, &x)?;
        }
        out.set_column(t, &acc);
    }
    Ok(out)
}

/// Diagonal of the joint graph/z-domain response `Σ_t Σ_k h_{k,t} λ_i^k z^{-t}`.
pub fn joint_transfer(
    basis: &SpectralBasis,
    coeffs: &FilterCoefficients,
    z: Complex64,
) -> Result<Vec<Complex64>> {
    if z == ZERO {
        return Err(Error::InvalidArgument(
            "z-transform evaluated at z = 0".into(),
        ));
    }
    let zinv = z.inv();
    let per_delay: Vec<Vec<Complex64>> = (0..coeffs.temporal_len())
        .map(|t| transfer_function(basis, &coeffs.taps(t)))
        .collect();
    Ok((0..basis.len())
        .map(|i| {
            per_delay
                .iter()
                .rev()
                .fold(ZERO, |acc, resp| acc * zinv + resp[i])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_symmetric, random_vector, rng, ONE};
    use crate::spectral::spectral_decompose;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_power_filter(s: &CMatrix, h: &[Complex64], x: &CVector) -> CVector {
        let mut power = CMatrix::identity(s.nrows(), s.nrows());
        let mut out = CVector::zeros(x.len());
        for &hk in h {
            out += (&power * x) * hk;
            power = &power * s;
        }
        out
    }

    #[test]
    fn identity_and_shift() {
        let mut r = rng(1);
        let s = random_symmetric(&mut r, 5);
        let x = random_vector(&mut r, 5);
        assert_eq!(apply_polynomial_filter(&s, &[ONE], &x).unwrap(), x);
        let w = apply_polynomial_filter(&s, &[ZERO, ONE], &x).unwrap();
        assert!((w - &s * &x).norm() < 1e-14);
        assert!(apply_polynomial_filter(&s, &[ONE], &CVector::zeros(4)).is_err());
    }

    #[test]
    fn horner_matches_dense_powers() {
        let mut r = rng(2);
        let s = random_symmetric(&mut r, 9);
        let x = random_vector(&mut r, 9);
        let h: Vec<Complex64> = (0..5)
            .map(|_| crate::linalg::complex_normal(&mut r))
            .collect();
        let w = apply_polynomial_filter(&s, &h, &x).unwrap();
        let oracle = dense_power_filter(&s, &h, &x);
        assert!((&w - &oracle).norm() <= 1e-10 * oracle.norm());
        let hm = filter_matrix(&s, &h).unwrap();
        assert!((&hm * &x - oracle).norm() <= 1e-10 * w.norm());
    }

    #[test]
    fn transfer_function_edge_cases() {
        let s = CMatrix::from_diagonal(&CVector::from_vec(vec![ZERO, c(0.5, 1.0), c(2.0, 0.0)]));
        let b = spectral_decompose(&s).unwrap();
        let constant = transfer_function(&b, &[c(3.0, -1.0)]);
        assert!(constant.iter().all(|&v| v == c(3.0, -1.0)));
        let h = [c(0.7, 0.2), c(1.0, 1.0), c(-2.0, 0.0)];
        let resp = transfer_function(&b, &h);
        assert_eq!(b.eigenvalues[0], ZERO);
        assert_eq!(resp[0], h[0]);
    }

    #[test]
    fn vertex_and_spectral_paths_agree() {
        let mut r = rng(3);
        let s = random_symmetric(&mut r, 10);
        let b = spectral_decompose(&s).unwrap();
        let x = random_vector(&mut r, 10);
        let h: Vec<Complex64> = (0..4)
            .map(|_| crate::linalg::complex_normal(&mut r))
            .collect();
        let vertex = apply_polynomial_filter(&s, &h, &x).unwrap();
        let spectral = apply_spectral_filter(&b, &h, &x).unwrap();
        assert!((&vertex - spectral).norm() <= 1e-8 * vertex.norm());
    }

    #[test]
    fn shift_invariance() {
        let mut r = rng(4);
        let s = random_symmetric(&mut r, 7);
        let h: Vec<Complex64> = (0..4)
            .map(|_| crate::linalg::complex_normal(&mut r))
            .collect();
        let hm = filter_matrix(&s, &h).unwrap();
        assert!((&s * &hm - &hm * &s).norm() <= 1e-9 * hm.norm());
    }

    fn random_coeffs(r: &mut rand_chacha::ChaCha8Rng, k: usize, kt: usize) -> FilterCoefficients {
        FilterCoefficients::new(crate::linalg::random_matrix(r, k + 1, kt)).unwrap()
    }

    #[test]
    fn temporal_identity_and_impulse() {
        let mut r = rng(5);
        let s = random_symmetric(&mut r, 4);
        let x = crate::linalg::random_matrix(&mut r, 4, 6);
        let mut id = CMatrix::zeros(3, 2);
        id[(0, 0)] = ONE;
        let ident = FilterCoefficients::new(id).unwrap();
        assert_eq!(apply_temporal_graph_filter(&s, &ident, &x).unwrap(), x);

        let coeffs = random_coeffs(&mut r, 2, 3);
        let mut impulse = CMatrix::zeros(4, 5);
        let delta = random_vector(&mut r, 4);
        impulse.set_column(0, &delta);
        let w = apply_temporal_graph_filter(&s, &coeffs, &impulse).unwrap();
        for t in 0..5 {
            let expected = if t < 3 {
                dense_power_filter(&s, &coeffs.taps(t), &delta)
            } else {
                CVector::zeros(4)
            };
            assert!((w.column(t) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn temporal_matches_double_sum() {
        let mut r = rng(6);
        let s = random_symmetric(&mut r, 5);
        let x = crate::linalg::random_matrix(&mut r, 5, 6);
        let coeffs = random_coeffs(&mut r, 3, 3);
        let w = apply_temporal_graph_filter(&s, &coeffs, &x).unwrap();
        for t in 0..6 {
            let mut expected = CVector::zeros(5);
            for tau in 0..3 {
                if tau > t {
                    continue;
                }
                let mut power = CMatrix::identity(5, 5);
                for k in 0..4 {
                    expected += (&power * x.column(t - tau)) * coeffs.matrix()[(k, tau)];
                    power = &power * &s;
                }
            }
            assert!((w.column(t) - expected).norm() < 1e-11);
        }
    }

    #[test]
    fn temporal_filter_is_time_invariant() {
        let mut r = rng(7);
        let s = random_symmetric(&mut r, 4);
        let coeffs = random_coeffs(&mut r, 2, 3);
        let x = crate::linalg::random_matrix(&mut r, 4, 6);
        let mut shifted = CMatrix::zeros(4, 7);
        shifted.columns_mut(1, 6).copy_from(&x);
        let w = apply_temporal_graph_filter(&s, &coeffs, &x).unwrap();
        let ws = apply_temporal_graph_filter(&s, &coeffs, &shifted).unwrap();
        assert!((ws.columns(1, 6) - &w).norm() < 1e-12);
        assert!(ws.column(0).norm() == 0.0);
    }

    #[test]
    fn joint_transfer_special_cases() {
        let mut r = rng(8);
        let s = random_symmetric(&mut r, 5);
        let b = spectral_decompose(&s).unwrap();
        let spatial = random_coeffs(&mut r, 3, 1);
        let tf = transfer_function(&b, &spatial.taps(0));
        for z in [c(1.0, 0.0), c(0.3, -2.0)] {
            let jt = joint_transfer(&b, &spatial, z).unwrap();
            for (a, e) in jt.iter().zip(&tf) {
                assert!((a - e).norm() < 1e-12);
            }
        }
        let coeffs = random_coeffs(&mut r, 2, 4);
        let dc = joint_transfer(&b, &coeffs, ONE).unwrap();
        for (i, &l) in b.eigenvalues.iter().enumerate() {
            let mut expected = ZERO;
            for t in 0..4 {
                for k in 0..3 {
                    expected += coeffs.matrix()[(k, t)] * l.powu(k as u32);
                }
            }
            assert!((dc[i] - expected).norm() < 1e-10);
        }
        assert!(joint_transfer(&b, &coeffs, ZERO).is_err());
    }

    #[test]
    fn joint_transfer_matches_dft_of_impulse_response() {
        let mut r = rng(9);
        let n = 6;
        let kt = 3;
        let s = random_symmetric(&mut r, n);
        let b = spectral_decompose(&s).unwrap();
        let coeffs = random_coeffs(&mut r, 2, kt);
        // Impulse at t = 0 along each graph mode; the response lives on 0..kt.
        let points = 8;
        for mode in 0..n {
            let delta = b.u.column(mode).into_owned();
            let mut impulse = CMatrix::zeros(n, points);
            impulse.set_column(0, &delta);
            let w = apply_temporal_graph_filter(&s, &coeffs, &impulse).unwrap();
            for m in 0..points {
                let theta = std::f64::consts::TAU * m as f64 / points as f64;
                let z = Complex64::from_polar(1.0, theta);
                // Direct DFT of the GFT-projected response.
                let mut dft = ZERO;
                for t in 0..points {
                    let proj: Complex64 = b.u.column(mode).dot(&w.column(t));
                    dft += proj * z.powi(-(t as i32));
                }
                let jt = joint_transfer(&b, &coeffs, z).unwrap();
                assert!((jt[mode] - dft).norm() < 1e-9, "mode {mode} point {m}");
            }
        }
    }

    #[test]
    fn coefficients_json_roundtrip() {
        let mut r = rng(10);
        let coeffs = random_coeffs(&mut r, 2, 3);
        let back = FilterCoefficients::from_json(&coeffs.to_json().unwrap()).unwrap();
        assert_eq!(back, coeffs);
        assert_eq!(back.order(), 2);
        assert_eq!(back.temporal_len(), 3);
    }
}
