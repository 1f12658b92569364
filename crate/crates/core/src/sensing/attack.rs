use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::AdmittanceModel;
use crate::linalg::{complex_normal, inf_norm, null_space, rng, submatrix, CMatrix, CVector};

/// Singular values at most this fraction of the largest count as null.
pub const NULL_RTOL: f64 = 1e-10;

/// A false-data injection that leaves every honest bus's current reading unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackInstance {
    /// Compromised buses `C`, a subset of the metered set.
    pub compromised: Vec<usize>,
    /// State perturbation over all buses, zero outside `C`.
    pub delta: CVector,
    pub alpha: f64,
}

fn honest_and_checked(observed: &[usize], compromised: &[usize], n: usize) -> Result<Vec<usize>> {
    for (i, &c) in compromised.iter().enumerate() {
        if c >= n {
            return Err(Error::IndexOutOfRange {
                index: c,
                node_count: n,
            });
        }
        if !observed.contains(&c) {
            return Err(Error::InvalidArgument(format!(
                "compromised bus {c} is not metered"
            )));
        }
        if compromised[..i].contains(&c) {
            return Err(Error::InvalidArgument(format!(
                "compromised bus {c} listed twice"
            )));
        }
    }
    Ok(observed
        .iter()
        .copied()
        .filter(|a| !compromised.contains(a))
        .collect())
}

/// Basis of `null(Y_PC)` for honest set `P = A \ C`.
pub fn attack_null_space(
    model: &AdmittanceModel,
    observed: &[usize],
    compromised: &[usize],
) -> Result<CMatrix> {
    let honest = honest_and_checked(observed, compromised, model.node_count)?;
    Ok(null_space(
        &submatrix(&model.y, &honest, compromised),
        NULL_RTOL,
    ))
}

/// Whether some null vector of `Y_PC` is nonzero on every compromised bus.
pub fn has_full_support(null: &CMatrix) -> bool {
    null.ncols() > 0 && null.row_iter().all(|r| r.norm() > 1e-8)
}

/// Random stealthy perturbation on the compromised set, scaled so that
/// `‖δx_C‖∞ = α`.
pub fn stealthy_attack(
    model: &AdmittanceModel,
    observed: &[usize],
    compromised: &[usize],
    alpha: f64,
    seed: u64,
) -> Result<AttackInstance> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "attack scale {alpha} must be positive"
        )));
    }
    let n = model.node_count;
    let honest = honest_and_checked(observed, compromised, n)?;
    let mut delta = CVector::zeros(n);
    if compromised.is_empty() {
        return Ok(AttackInstance {
            compromised: vec![],
            delta,
            alpha,
        });
    }
    let y_pc = submatrix(&model.y, &honest, compromised);
    let basis = null_space(&y_pc, NULL_RTOL);
    if basis.ncols() == 0 {
        return Err(Error::NoNullSpace(format!(
            "Y_PC is {}x{} with full column rank",
            honest.len(),
            compromised.len()
        )));
    }
    let mut r = rng(seed);
    let coeffs = CVector::from_fn(basis.ncols(), |_, _| complex_normal(&mut r));
    let mut dx = &basis * coeffs;
    let peak = inf_norm(&dx);
    if !(peak > 0.0) {
        return Err(Error::NoNullSpace("degenerate null combination".into()));
    }
    dx *= Complex64::new(alpha / peak, 0.0);
    for z in dx.iter_mut() {
        if z.norm() <= 1e-10 * alpha {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let residual = inf_norm(&(&y_pc * &dx));
    if residual > 1e-8 * dx.norm() {
        return Err(Error::NoNullSpace(format!(
            "honest-current residual {residual:.3e}"
        )));
    }
    for (k, &c) in compromised.iter().enumerate() {
        delta[c] = dx[k];
    }
    Ok(AttackInstance {
        compromised: compromised.to_vec(),
        delta,
        alpha,
    })
}

/// Draw compromised sets of the given size from the metered buses until one
/// admits a stealthy perturbation touching every bus in it.
pub fn choose_attack_set<R: Rng + ?Sized>(
    model: &AdmittanceModel,
    observed: &[usize],
    size: usize,
    rng: &mut R,
    max_tries: usize,
) -> Result<Vec<usize>> {
    if size > observed.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot compromise {size} of {} metered buses",
            observed.len()
        )));
    }
    for _ in 0..max_tries {
        let mut set: Vec<usize> = sample(rng, observed.len(), size)
            .into_iter()
            .map(|i| observed[i])
            .collect();
        set.sort_unstable();
        if size == 0 || has_full_support(&attack_null_space(model, observed, &set)?) {
            return Ok(set);
        }
    }
    Err(Error::NoNullSpace(format!(
        "no stealthy set of {size} among {} metered buses after {max_tries} draws",
        observed.len()
    )))
}

/// Indicator over the metered buses of a nonzero perturbation.
pub fn make_labels(delta: &CVector, observed: &[usize]) -> DVector<f64> {
    DVector::from_iterator(
        observed.len(),
        observed
            .iter()
            .map(|&a| if delta[a].norm() > 0.0 { 1.0 } else { 0.0 }),
    )
}
