//! Perturbation bounds for polynomial graph filters and filter networks,
//! with Monte-Carlo falsifiers.
//!
//! Three quantities are bounded:
//! - the spectral radius of the coefficient-error filter `Σ δ_k Ŝ^k`
//!   (Bernstein-polynomial bound over the ε-pseudospectral disc),
//! - the operator-norm change `‖H(S + E) − H(S)‖₂` of a fixed filter,
//! - the output change of a filter followed by dense complex layers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::filter_matrix;
use crate::linalg::{
    binomial, perturbation_on_sphere, random_vector, rng, sigma_max, spectral_radius, CMatrix,
    CVector,
};
use crate::nn::crelu;
use crate::spectral::{pseudospectral_radius, PseudospectrumQuery};

/// Relative slack used when deciding whether a bound held.
pub const BOUND_SLACK: f64 = 1e-9;

/// Lower-triangular map from Bernstein coefficients `b` on `[0, ρ]` to the
/// power coefficients `a` of the same degree-`K` polynomial: `a = M b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinMap {
    pub order: usize,
    pub rho: f64,
    pub m: DMatrix<f64>,
}

pub fn build_bernstein_map(order: usize, rho: f64) -> Result<BernsteinMap> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius {rho} must be positive"
        )));
    }
    let k = order;
    let m = DMatrix::from_fn(k + 1, k + 1, |j, i| {
        if i > j {
            0.0
        } else {
            let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
            binomial(k, j) * binomial(j, i) * sign / rho.powi(j as i32)
        }
    });
    Ok(BernsteinMap { order, rho, m })
}

impl BernsteinMap {
    pub fn inverse(&self) -> DMatrix<f64> {
        let eye = DMatrix::identity(self.order + 1, self.order + 1);
        self.m
            .solve_lower_triangular(&eye)
            .expect("unit-free diagonal is nonzero")
    }

    /// `M⁻¹ a`: Bernstein coefficients of the polynomial with power coefficients `a`.
    pub fn bernstein_coefficients(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.order + 1 {
            return Err(Error::Dimension(format!(
                "{} coefficients for order {}",
                a.len(),
                self.order
            )));
        }
        let rhs = nalgebra::DVector::from_column_slice(a);
        let b = self
            .m
            .solve_lower_triangular(&rhs)
            .ok_or(Error::Singular("Bernstein map"))?;
        Ok(b.iter().copied().collect())
    }

    /// `max_i [M⁻¹ a]_i`, an upper bound on `Σ a_k x^k` over `0 <= x <= ρ`.
    pub fn bound(&self, a: &[f64]) -> Result<f64> {
        Ok(self
            .bernstein_coefficients(a)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

fn check_same_len(h: &[Complex64], h_hat: &[Complex64]) -> Result<()> {
    if h.is_empty() || h.len() != h_hat.len() {
        return Err(Error::Dimension(format!(
            "filters of length {} and {}",
            h.len(),
            h_hat.len()
        )));
    }
    Ok(())
}

/// Bound on `ρ(Σ_k (ĥ_k − h_k) Ŝ^k)` for every `Ŝ` whose spectrum lies in the
/// disc of radius `rho`.
pub fn transfer_error_bound(h: &[Complex64], h_hat: &[Complex64], rho: f64) -> Result<f64> {
    check_same_len(h, h_hat)?;
    let delta: Vec<f64> = h.iter().zip(h_hat).map(|(a, b)| (b - a).norm()).collect();
    build_bernstein_map(h.len() - 1, rho)?.bound(&delta)
}

/// `max_{ℓ=0..K} Σ_{k=ℓ}^{K} |h_k| C(k, ℓ) σ^{k−ℓ}`.
pub fn permutation_constant(h: &[Complex64], sigma_max_s: f64) -> f64 {
    let k_max = h.len().saturating_sub(1);
    (0..=k_max)
        .map(|l| {
            (l..=k_max)
                .map(|k| h[k].norm() * binomial(k, l) * sigma_max_s.powi((k - l) as i32))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Bound on `‖H(S + E) − H(S)‖₂` over all `‖E‖₂ <= eps`, for `eps < 1`.
pub fn permutation_error_bound(h: &[Complex64], s: &CMatrix, eps: f64) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Dimension("empty filter".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::BoundDomain(format!(
            "eps = {eps} must be non-negative"
        )));
    }
    if eps >= 1.0 {
        return Err(Error::BoundDomain(format!(
            "geometric series needs eps < 1, got {eps}"
        )));
    }
    let k = (h.len() - 1) as i32;
    let m = permutation_constant(h, sigma_max(s));
    Ok(m * eps * (1.0 - eps.powi(k)) / (1.0 - eps))
}

/// Unquantified constants of the composite bounds. Defaults give the plain
/// triangle-inequality composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            mu1: 1.0,
            mu2: 1.0,
            zeta1: 0.0,
            zeta2: 0.0,
        }
    }
}

fn pseudo_radius(s: &CMatrix, eps: f64) -> Result<f64> {
    let rho = pseudospectral_radius(s, &PseudospectrumQuery::new(eps))?;
    if rho > 0.0 {
        Ok(rho)
    } else {
        // Nilpotent S with eps = 0: any positive radius bounds the spectrum.
        Ok(f64::MIN_POSITIVE.sqrt())
    }
}

/// `μ1 (transfer + ζ1) + permutation`, with the transfer term evaluated on the
/// ε-pseudospectral radius of `s`.
pub fn gcn_permutation_bound(
    h: &[Complex64],
    h_hat: &[Complex64],
    s: &CMatrix,
    eps: f64,
    c: &BoundConstants,
) -> Result<f64> {
    check_same_len(h, h_hat)?;
    let perm = permutation_error_bound(h, s, eps)?;
    let transfer = transfer_error_bound(h, h_hat, pseudo_radius(s, eps)?)?;
    Ok(c.mu1 * (transfer + c.zeta1) + perm)
}

/// A single-feature graph filter followed by complex dense layers:
/// `y = Θ_L CReLU(... Θ_1 CReLU(H(S) x))`, with the last layer linear.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterNetwork {
    pub h: Vec<Complex64>,
    pub layers: Vec<CMatrix>,
}

impl FilterNetwork {
    pub fn forward(&self, s: &CMatrix, x: &CVector) -> Result<CVector> {
        let hs = filter_matrix(s, &self.h)?;
        self.forward_with(&hs, x)
    }

    fn forward_with(&self, hs: &CMatrix, x: &CVector) -> Result<CVector> {
        if x.len() != hs.ncols() {
            return Err(Error::Dimension(format!(
                "input of length {} for {} nodes",
                x.len(),
                hs.ncols()
            )));
        }
        let mut a = (hs * x).map(crelu);
        for (i, theta) in self.layers.iter().enumerate() {
            if theta.ncols() != a.len() {
                return Err(Error::Dimension(format!(
                    "layer {i} expects {} inputs",
                    theta.ncols()
                )));
            }
            a = theta * a;
            if i + 1 < self.layers.len() {
                a = a.map(crelu);
            }
        }
        Ok(a)
    }

    fn check_pair(&self, other: &FilterNetwork) -> Result<()> {
        check_same_len(&self.h, &other.h)?;
        if self.layers.is_empty()
            || self.layers.len() != other.layers.len()
            || self
                .layers
                .iter()
                .zip(&other.layers)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Dimension("networks of different shapes".into()));
        }
        Ok(())
    }
}

/// Output-distance bounds of a perturbed [`FilterNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBound {
    /// Measured `‖Ŝ − S‖₂`.
    pub eps: f64,
    /// Constant-based recursion `Δ_1, ..., Δ_L`.
    pub deltas: Vec<f64>,
    /// Constant-free chain, built from the realized operator norms.
    pub chain: Vec<f64>,
}

impl LayerBound {
    pub fn delta(&self) -> f64 {
        *self.deltas.last().unwrap()
    }

    pub fn chain_value(&self) -> f64 {
        *self.chain.last().unwrap()
    }
}

/// Propagate filter and weight perturbations through the dense layers.
///
/// The chain value holds for every input with `‖x‖ <= 1`:
/// `‖y − ŷ‖ <= ‖Θ_1‖ ‖H(S) − Ĥ(Ŝ)‖ + δ_1 ‖Ĥ(Ŝ)‖` for one layer, then
/// `‖Θ_ℓ‖ c_{ℓ−1} + δ_ℓ Π_{m<ℓ} ‖Θ̂_m‖ ‖Ĥ(Ŝ)‖` per further layer.
pub fn layer_propagation_bound(
    net: &FilterNetwork,
    net_hat: &FilterNetwork,
    s: &CMatrix,
    s_hat: &CMatrix,
    c: &BoundConstants,
) -> Result<LayerBound> {
    net.check_pair(net_hat)?;
    if s.shape() != s_hat.shape() {
        return Err(Error::Dimension(
            "shift operators of different sizes".into(),
        ));
    }
    let rho = pseudo_radius(s, sigma_max(&(s_hat - s)))?;
    layer_bound_at_radius(net, net_hat, s, s_hat, rho, c)
}

/// [`layer_propagation_bound`] with `ρ_ε(S)` supplied by the caller.
fn layer_bound_at_radius(
    net: &FilterNetwork,
    net_hat: &FilterNetwork,
    s: &CMatrix,
    s_hat: &CMatrix,
    rho: f64,
    c: &BoundConstants,
) -> Result<LayerBound> {
    let eps = sigma_max(&(s_hat - s));
    let hs = filter_matrix(s, &net.h)?;
    let hs_hat = filter_matrix(s_hat, &net_hat.h)?;
    let filter_gap = sigma_max(&(&hs - &hs_hat));
    let hat_norm = sigma_max(&hs_hat);

    let hat_abs: Vec<f64> = net_hat.h.iter().map(|z| z.norm()).collect();
    let psi1 = c.mu2 * (build_bernstein_map(net.h.len() - 1, rho)?.bound(&hat_abs)? + c.zeta2);
    let psi2 = c.mu1 * (transfer_error_bound(&net.h, &net_hat.h, rho)? + c.zeta1)
        + permutation_error_bound(&net.h, s, eps)?;

    let mut deltas = Vec::with_capacity(net.layers.len());
    let mut chain = Vec::with_capacity(net.layers.len());
    let mut hat_product = 1.0;
    for (theta, theta_hat) in net.layers.iter().zip(&net_hat.layers) {
        let sig = sigma_max(theta);
        let dw = sigma_max(&(theta - theta_hat));
        match (deltas.last(), chain.last()) {
            (Some(&d), Some(&ch)) => {
                deltas.push(sig * d + dw * hat_product * psi1);
                chain.push(sig * ch + dw * hat_product * hat_norm);
            }
            _ => {
                deltas.push(dw * psi1 + sig * psi2);
                chain.push(sig * filter_gap + dw * hat_norm);
            }
        }
        hat_product *= sigma_max(theta_hat);
    }
    Ok(LayerBound { eps, deltas, chain })
}

/// Largest `‖y − ŷ‖` over the given inputs, which must lie in the unit ball.
pub fn empirical_layer_gap(
    net: &FilterNetwork,
    net_hat: &FilterNetwork,
    s: &CMatrix,
    s_hat: &CMatrix,
    inputs: &[CVector],
) -> Result<f64> {
    net.check_pair(net_hat)?;
    let hs = filter_matrix(s, &net.h)?;
    let hs_hat = filter_matrix(s_hat, &net_hat.h)?;
    let mut worst: f64 = 0.0;
    for x in inputs {
        if x.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "input norm {} exceeds 1",
                x.norm()
            )));
        }
        let gap = (net.forward_with(&hs, x)? - net_hat.forward_with(&hs_hat, x)?).norm();
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Uniform draw from the complex unit ball in `C^n`.
pub fn unit_ball_input<R: Rng + ?Sized>(r: &mut R, n: usize) -> CVector {
    let v = random_vector(r, n);
    let radius: f64 = r.random::<f64>().powf(1.0 / (2 * n) as f64);
    &v * Complex64::new(radius / v.norm(), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Transfer,
    Permutation,
    Gcn,
    Layer,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Transfer => "transfer",
            BoundKind::Permutation => "permutation",
            BoundKind::Gcn => "gcn",
            BoundKind::Layer => "layer",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "transfer" => Ok(BoundKind::Transfer),
            "permutation" => Ok(BoundKind::Permutation),
            "gcn" => Ok(BoundKind::Gcn),
            "layer" => Ok(BoundKind::Layer),
            other => Err(Error::InvalidArgument(format!(
                "unknown bound kind {other:?}"
            ))),
        }
    }
}

/// What a Monte-Carlo falsifier measures under random `E` with `‖E‖₂ = ε`.
#[derive(Debug, Clone, PartialEq)]
pub enum WorstCaseTarget {
    /// `ρ(Σ (ĥ_k − h_k) Ŝ^k)`.
    Transfer {
        h: Vec<Complex64>,
        h_hat: Vec<Complex64>,
    },
    /// `‖H(Ŝ) − H(S)‖₂`.
    Permutation { h: Vec<Complex64> },
    /// `‖Ĥ(Ŝ) − H(S)‖₂`.
    Gcn {
        h: Vec<Complex64>,
        h_hat: Vec<Complex64>,
    },
    /// `max ‖y − ŷ‖` over unit-ball inputs.
    Layer {
        net: FilterNetwork,
        net_hat: FilterNetwork,
        inputs: usize,
    },
}

impl WorstCaseTarget {
    pub fn kind(&self) -> BoundKind {
        match self {
            WorstCaseTarget::Transfer { .. } => BoundKind::Transfer,
            WorstCaseTarget::Permutation { .. } => BoundKind::Permutation,
            WorstCaseTarget::Gcn { .. } => BoundKind::Gcn,
            WorstCaseTarget::Layer { .. } => BoundKind::Layer,
        }
    }

    fn order(&self) -> usize {
        match self {
            WorstCaseTarget::Transfer { h, .. }
            | WorstCaseTarget::Permutation { h }
            | WorstCaseTarget::Gcn { h, .. } => h.len().saturating_sub(1),
            WorstCaseTarget::Layer { net, .. } => net.h.len().saturating_sub(1),
        }
    }
}

/// One perturbation trial. Each trial draws from its own seeded stream so the
/// fan-out does not change results.
fn trial(
    s: &CMatrix,
    target: &WorstCaseTarget,
    eps: f64,
    seed: u64,
    index: u64,
) -> Result<(f64, CMatrix)> {
    let mut r = rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index));
    let e = perturbation_on_sphere(&mut r, s.nrows(), eps);
    let s_hat = s + &e;
    let value = match target {
        WorstCaseTarget::Transfer { h, h_hat } => {
            let delta: Vec<Complex64> = h.iter().zip(h_hat).map(|(a, b)| b - a).collect();
            spectral_radius(&filter_matrix(&s_hat, &delta)?)?
        }
        WorstCaseTarget::Permutation { h } => {
            sigma_max(&(filter_matrix(&s_hat, h)? - filter_matrix(s, h)?))
        }
        WorstCaseTarget::Gcn { h, h_hat } => {
            sigma_max(&(filter_matrix(&s_hat, h_hat)? - filter_matrix(s, h)?))
        }
        WorstCaseTarget::Layer {
            net,
            net_hat,
            inputs,
        } => {
            let xs: Vec<CVector> = (0..*inputs)
                .map(|_| unit_ball_input(&mut r, s.nrows()))
                .collect();
            empirical_layer_gap(net, net_hat, s, &s_hat, &xs)?
        }
    };
    Ok((value, s_hat))
}

/// Running maximum of the realized quantity over `trials` random perturbations.
pub fn empirical_worst_case(
    s: &CMatrix,
    target: &WorstCaseTarget,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial(s, target, eps, seed, i).map(|(v, _)| v))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Outcome of checking one bound against its falsifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub experiment: String,
    pub kind: BoundKind,
    pub nodes: usize,
    pub order: usize,
    pub eps: f64,
    pub seed: u64,
    pub trials: usize,
    /// Bound value; for per-trial bounds, the one of the tightest trial.
    pub theoretical: f64,
    /// Realized value paired with `theoretical`.
    pub empirical: f64,
    pub violations: usize,
    pub satisfied: bool,
}

pub const CSV_HEADER: &str =
    "experiment,kind,nodes,order,eps,seed,trials,theoretical,empirical,violations,satisfied";

impl BoundReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.12e},{:.12e},{},{}",
            self.experiment,
            self.kind.as_str(),
            self.nodes,
            self.order,
            self.eps,
            self.seed,
            self.trials,
            self.theoretical,
            self.empirical,
            self.violations,
            self.satisfied
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn holds(empirical: f64, theoretical: f64) -> bool {
    empirical <= theoretical + BOUND_SLACK * theoretical.abs()
}

/// Run the falsifier for `target` and compare each trial against its bound.
///
/// Transfer bounds use `ρ_ε(S)` with `ε = ‖E‖₂`; every perturbed spectrum lies
/// inside that pseudospectrum. Layer bounds use the constant-free chain.
pub fn run_bound_experiment(
    experiment: &str,
    s: &CMatrix,
    target: &WorstCaseTarget,
    eps: f64,
    trials: usize,
    seed: u64,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let fixed = match target {
        WorstCaseTarget::Transfer { h, h_hat } => {
            Some(transfer_error_bound(h, h_hat, pseudo_radius(s, eps)?)?)
        }
        WorstCaseTarget::Permutation { h } => Some(permutation_error_bound(h, s, eps)?),
        WorstCaseTarget::Gcn { h, h_hat } => {
            Some(gcn_permutation_bound(h, h_hat, s, eps, constants)?)
        }
        WorstCaseTarget::Layer { .. } => None,
    };
    // Every trial has ‖E‖₂ = ε, so one radius serves all layer trials.
    let layer_rho = match target {
        WorstCaseTarget::Layer { .. } => pseudo_radius(s, eps)?,
        _ => 0.0,
    };
    let pairs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let (value, s_hat) = trial(s, target, eps, seed, i)?;
            let bound = match (fixed, target) {
                (Some(b), _) => b,
                (None, WorstCaseTarget::Layer { net, net_hat, .. }) => {
                    layer_bound_at_radius(net, net_hat, s, &s_hat, layer_rho, constants)?
                        .chain_value()
                }
                _ => unreachable!("fixed bound computed for non-layer targets"),
            };
            Ok((bound, value))
        })
        .collect::<Result<_>>()?;
    let violations = pairs.iter().filter(|(b, v)| !holds(*v, *b)).count();
    // Report the trial closest to (or furthest past) its bound.
    let ratio = |(b, v): &(f64, f64)| {
        if *b > 0.0 {
            v / b
        } else if *v > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let (theoretical, empirical) =
        pairs.iter().copied().fold(
            pairs[0],
            |best, p| if ratio(&p) > ratio(&best) { p } else { best },
        );
    Ok(BoundReport {
        experiment: experiment.to_string(),
        kind: target.kind(),
        nodes: s.nrows(),
        order: target.order(),
        eps,
        seed,
        trials,
        theoretical,
        empirical,
        violations,
        satisfied: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, random_symmetric, ONE, ZERO};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn normalized_symmetric(seed: u64, n: usize) -> CMatrix {
        let mut r = rng(seed);
        let s = random_symmetric(&mut r, n);
        let norm = sigma_max(&s);
        s / c(norm)
    }

    #[test]
    fn first_order_map_and_inverse() {
        let b = build_bernstein_map(1, 1.0).unwrap();
        assert_eq!(b.m, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0]));
        assert_eq!(
            b.inverse(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])
        );
        let (a, bb) = (0.3, 1.7);
        assert!((b.bound(&[a, bb]).unwrap() - (a + bb)).abs() < 1e-15);
        assert!(build_bernstein_map(2, 0.0).is_err());
        assert!(build_bernstein_map(2, -1.0).is_err());
    }

    #[test]
    fn map_rows_follow_the_binomial_pattern() {
        let (k, rho) = (4, 1.7);
        let b = build_bernstein_map(k, rho).unwrap();
        assert_eq!(b.m[(0, 0)], 1.0);
        // Row 1 is [-K, K, 0, ...] / ρ and the last row alternates C(K, i).
        assert!((b.m[(1, 0)] + k as f64 / rho).abs() < 1e-14);
        assert!((b.m[(1, 1)] - k as f64 / rho).abs() < 1e-14);
        for i in 0..=k {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((b.m[(k, i)] - sign * binomial(k, i) / rho.powi(k as i32)).abs() < 1e-14);
        }
        let prod = &b.m * b.inverse();
        assert!((prod - DMatrix::<f64>::identity(k + 1, k + 1)).norm() < 1e-10);
    }

    #[test]
    fn bernstein_coefficients_reproduce_the_polynomial() {
        // Σ b_i C(K,i) ξ^i (1-ξ)^(K-i) must equal Σ a_k x^k at x = ρ ξ.
        let (k, rho) = (3, 2.0);
        let b = build_bernstein_map(k, rho).unwrap();
        let a = [0.5, 0.25, 1.5, 0.125];
        let bern = b.bernstein_coefficients(&a).unwrap();
        for step in 0..=10 {
            let xi = step as f64 / 10.0;
            let x = rho * xi;
            let power: f64 = a
                .iter()
                .enumerate()
                .map(|(i, ai)| ai * x.powi(i as i32))
                .sum();
            let basis: f64 = (0..=k)
                .map(|i| {
                    bern[i] * binomial(k, i) * xi.powi(i as i32) * (1.0 - xi).powi((k - i) as i32)
                })
                .sum();
            assert!((power - basis).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_dominates_polynomial_max_on_grid() {
        let mut r = rng(9);
        for trial in 0..50 {
            let k = 1 + trial % 5;
            let rho = 0.2 + 3.0 * r.random::<f64>();
            let delta: Vec<f64> = (0..=k).map(|_| r.random::<f64>()).collect();
            let bound = build_bernstein_map(k, rho).unwrap().bound(&delta).unwrap();
            let grid_max = (0..=2000)
                .map(|i| {
                    let x = rho * i as f64 / 2000.0;
                    delta
                        .iter()
                        .enumerate()
                        .map(|(j, d)| d * x.powi(j as i32))
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            assert!(grid_max <= bound * (1.0 + 1e-12), "{grid_max} > {bound}");
        }
    }

    #[test]
    fn transfer_bound_cases() {
        let h = [c(0.3), c(-1.0), Complex64::new(0.2, 0.4)];
        assert_eq!(transfer_error_bound(&h, &h, 1.0).unwrap(), 0.0);
        assert!(
            (transfer_error_bound(&[c(1.0)], &[Complex64::new(1.0, 0.5)], 3.0).unwrap() - 0.5)
                .abs()
                < 1e-15
        );
        let got = transfer_error_bound(&[ZERO, ZERO], &[c(0.1), c(0.2)], 1.0).unwrap();
        assert!((got - 0.3).abs() < 1e-15);
        assert!(transfer_error_bound(&h, &h[..2], 1.0).is_err());
    }

    #[test]
    fn permutation_constant_cases() {
        assert_eq!(permutation_constant(&[ZERO, ONE], 2.0), 2.0);
        assert_eq!(permutation_constant(&[Complex64::new(3.0, 4.0)], 7.0), 5.0);
        let mut r = rng(2);
        let h: Vec<Complex64> = (0..5)
            .map(|_| crate::linalg::complex_normal(&mut r))
            .collect();
        let sigma: f64 = 1.3;
        let mut brute: f64 = 0.0;
        for l in 0..5 {
            let mut acc = 0.0;
            for k in l..5 {
                acc += h[k].norm() * binomial(k, l) * sigma.powi((k - l) as i32);
            }
            brute = brute.max(acc);
        }
        assert!((permutation_constant(&h, sigma) - brute).abs() < 1e-13);
    }

    #[test]
    fn permutation_bound_domain_and_degenerate_cases() {
        let s = normalized_symmetric(1, 5);
        let h = [c(0.5), c(1.0), c(-0.3)];
        assert_eq!(permutation_error_bound(&h, &s, 0.0).unwrap(), 0.0);
        assert!(matches!(
            permutation_error_bound(&h, &s, 1.0),
            Err(Error::BoundDomain(_))
        ));
        assert!(matches!(
            permutation_error_bound(&h, &s, 2.0),
            Err(Error::BoundDomain(_))
        ));
        // Identity filter: realized error is exactly ‖E‖₂.
        let id = [ZERO, ONE];
        let bound = permutation_error_bound(&id, &s, 0.2).unwrap();
        let target = WorstCaseTarget::Permutation { h: id.to_vec() };
        let worst = empirical_worst_case(&s, &target, 0.2, 50, 3).unwrap();
        assert!((worst - 0.2).abs() < 1e-12);
        assert!(holds(worst, bound));
    }

    #[test]
    fn permutation_bound_survives_monte_carlo() {
        let mut r = rng(4);
        let s = random_symmetric(&mut r, 6);
        let h: Vec<Complex64> = (0..4)
            .map(|_| crate::linalg::complex_normal(&mut r))
            .collect();
        let bound = permutation_error_bound(&h, &s, 0.05).unwrap();
        let target = WorstCaseTarget::Permutation { h };
        assert!(empirical_worst_case(&s, &target, 0.05, 200, 5).unwrap() <= bound);
    }

    #[test]
    fn gcn_bound_composes_components() {
        let s = normalized_symmetric(6, 5);
        let h = [c(0.2), c(0.7), c(-0.1)];
        let h_hat = [c(0.25), c(0.6), c(-0.1)];
        let k = BoundConstants::default();
        assert_eq!(gcn_permutation_bound(&h, &h, &s, 0.0, &k).unwrap(), 0.0);
        let perm = permutation_error_bound(&h, &s, 0.05).unwrap();
        assert!((gcn_permutation_bound(&h, &h, &s, 0.05, &k).unwrap() - perm).abs() < 1e-15);
        let rho = pseudo_radius(&s, 0.05).unwrap();
        let sum = transfer_error_bound(&h, &h_hat, rho).unwrap() + perm;
        assert!((gcn_permutation_bound(&h, &h_hat, &s, 0.05, &k).unwrap() - sum).abs() < 1e-12);
    }

    fn two_layer(seed: u64, n: usize, m: usize) -> (FilterNetwork, FilterNetwork) {
        let mut r = rng(seed);
        let h: Vec<Complex64> = (0..3)
            .map(|_| crate::linalg::complex_normal(&mut r) * 0.5)
            .collect();
        let theta = random_matrix(&mut r, m, n) * c(0.3);
        let h_hat: Vec<Complex64> = h
            .iter()
            .map(|z| z + crate::linalg::complex_normal(&mut r) * 0.05)
            .collect();
        let theta_hat = &theta + random_matrix(&mut r, m, n) * c(0.02);
        (
            FilterNetwork {
                h,
                layers: vec![theta],
            },
            FilterNetwork {
                h: h_hat,
                layers: vec![theta_hat],
            },
        )
    }

    #[test]
    fn identical_networks_have_zero_bounds() {
        let s = normalized_symmetric(7, 5);
        let (net, _) = two_layer(8, 5, 3);
        let b = layer_propagation_bound(&net, &net, &s, &s, &BoundConstants::default()).unwrap();
        assert_eq!(b.delta(), 0.0);
        assert_eq!(b.chain_value(), 0.0);
    }

    #[test]
    fn last_layer_only_perturbation() {
        let s = normalized_symmetric(9, 5);
        let mut r = rng(10);
        let h = vec![c(0.3), c(0.5)];
        let l1 = random_matrix(&mut r, 4, 5);
        let l2 = random_matrix(&mut r, 2, 4);
        let l2_hat = &l2 + random_matrix(&mut r, 2, 4) * c(0.1);
        let net = FilterNetwork {
            h: h.clone(),
            layers: vec![l1.clone(), l2.clone()],
        };
        let net_hat = FilterNetwork {
            h: h.clone(),
            layers: vec![l1.clone(), l2_hat.clone()],
        };
        let k = BoundConstants::default();
        let b = layer_propagation_bound(&net, &net_hat, &s, &s, &k).unwrap();
        assert_eq!(b.deltas[0], 0.0);
        let rho = pseudo_radius(&s, 0.0).unwrap();
        let abs: Vec<f64> = h.iter().map(|z| z.norm()).collect();
        let psi1 = build_bernstein_map(1, rho).unwrap().bound(&abs).unwrap();
        let expected = sigma_max(&(&l2 - &l2_hat)) * sigma_max(&l1) * psi1;
        assert!((b.delta() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn chain_bounds_two_layer_outputs() {
        let s = normalized_symmetric(11, 6);
        let (net, net_hat) = two_layer(12, 6, 4);
        let mut r = rng(13);
        let e = perturbation_on_sphere(&mut r, 6, 0.05);
        let s_hat = &s + e;
        let xs: Vec<CVector> = (0..500).map(|_| unit_ball_input(&mut r, 6)).collect();
        let gap = empirical_layer_gap(&net, &net_hat, &s, &s_hat, &xs).unwrap();
        let b = layer_propagation_bound(&net, &net_hat, &s, &s_hat, &BoundConstants::default())
            .unwrap();
        assert!(gap <= b.chain_value() * (1.0 + BOUND_SLACK));
        assert!((b.eps - 0.05).abs() < 1e-12);
        let outside = vec![CVector::from_element(6, c(1.0))];
        assert!(empirical_layer_gap(&net, &net_hat, &s, &s_hat, &outside).is_err());
    }

    #[test]
    fn worst_case_is_a_running_max() {
        let s = normalized_symmetric(14, 5);
        let target = WorstCaseTarget::Transfer {
            h: vec![c(0.1), c(0.4)],
            h_hat: vec![c(0.2), c(0.3)],
        };
        assert_eq!(
            empirical_worst_case(
                &s,
                &WorstCaseTarget::Permutation { h: vec![ONE, ONE] },
                0.0,
                5,
                1
            )
            .unwrap(),
            0.0
        );
        let one = empirical_worst_case(&s, &target, 0.1, 1, 2).unwrap();
        let many = empirical_worst_case(&s, &target, 0.1, 100, 2).unwrap();
        assert!(one <= many);
        assert!(empirical_worst_case(&s, &target, 0.1, 0, 2).is_err());
        let id = WorstCaseTarget::Permutation { h: vec![ZERO, ONE] };
        let w = empirical_worst_case(&s, &id, 0.1, 1000, 3).unwrap();
        assert!((w - 0.1).abs() <= 0.02 * 0.1);
    }

    #[test]
    fn transfer_experiment_reports_no_violations() {
        let s = normalized_symmetric(15, 6);
        let target = WorstCaseTarget::Transfer {
            h: vec![c(0.5), c(-0.2), Complex64::new(0.1, 0.3)],
            h_hat: vec![c(0.45), c(-0.1), Complex64::new(0.2, 0.3)],
        };
        let rep = run_bound_experiment("t", &s, &target, 0.05, 100, 1, &BoundConstants::default())
            .unwrap();
        assert!(rep.satisfied && rep.violations == 0);
        assert!(rep.empirical <= rep.theoretical);
        assert_eq!(rep.kind, BoundKind::Transfer);
        assert_eq!(
            rep.csv_row().split(',').count(),
            CSV_HEADER.split(',').count()
        );
        let back: BoundReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }
}
