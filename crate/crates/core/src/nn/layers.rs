use num_complex::Complex64;

use super::tensor::crelu_matrix;
use crate::error::{Error, Result};
use crate::linalg::{sigma_max, CMatrix};

/// Shift operator as consumed by the network layers.
///
/// With normalization on, layers see `S / σ_max(S)` so that powers up to the
/// filter order stay bounded; losses and recovery keep using the raw matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGso {
    pub matrix: CMatrix,
    pub scale: f64,
}

impl LayerGso {
    pub fn new(s: &CMatrix, normalize: bool) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::Dimension(format!(
                "{}x{} shift operator",
                s.nrows(),
                s.ncols()
            )));
        }
        let scale = if normalize { sigma_max(s) } else { 1.0 };
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(
                "shift operator has zero norm".into(),
            ));
        }
        Ok(LayerGso {
            matrix: s / Complex64::new(scale, 0.0),
            scale,
        })
    }

    pub fn node_count(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Full-window temporal convolution `X̄ = X Γ` (`|V| x T` times `T x K_t`).
pub fn temporal_conv(gamma: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    if x.ncols() != gamma.nrows() {
        return Err(Error::Dimension(format!(
            "window width {} against kernel width {}",
            x.ncols(),
            gamma.nrows()
        )));
    }
    Ok(x * gamma)
}

/// `[X̄, S X̄, ..., S^K X̄]`.
pub(crate) fn shifted_powers(s: &CMatrix, xbar: &CMatrix, order: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(xbar.clone());
    for k in 1..=order {
        let next = s * &out[k - 1];
        out.push(next);
    }
    out
}

/// Pre-activation `Σ_k S^k X̄ H_k`, by Horner recursion over `k`.
pub fn graph_conv_linear(s: &CMatrix, hs: &[CMatrix], xbar: &CMatrix) -> Result<CMatrix> {
    let Some((last, rest)) = hs.split_last() else {
        return Err(Error::InvalidArgument(
            "graph convolution needs at least H_0".into(),
        ));
    };
    if s.nrows() != s.ncols() || s.ncols() != xbar.nrows() {
        return Err(Error::Dimension(format!(
            "{}x{} shift operator against {} nodes",
            s.nrows(),
            s.ncols(),
            xbar.nrows()
        )));
    }
    for h in hs {
        if h.nrows() != xbar.ncols() || h.ncols() != last.ncols() {
            return Err(Error::Dimension(format!(
                "coefficient block {}x{} for {} input channels",
                h.nrows(),
                h.ncols(),
                xbar.ncols()
            )));
        }
    }
    let mut acc = xbar * last;
    for h in rest.iter().rev() {
        acc = s * acc + xbar * h;
    }
    Ok(acc)
}

/// Multi-feature graph convolution `CReLU(Σ_k S^k X̄ H_k)`.
pub fn graph_conv(s: &CMatrix, hs: &[CMatrix], xbar: &CMatrix) -> Result<CMatrix> {
    Ok(crelu_matrix(&graph_conv_linear(s, hs, xbar)?))
}
