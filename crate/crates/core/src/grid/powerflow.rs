use num_complex::Complex64;

use super::AdmittanceModel;
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, CMatrix, CVector};

/// Stopping rule for the fixed-point current-injection iteration.
#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest acceptable power mismatch on non-slack buses.
    pub residual_tolerance: f64,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tolerance: 1e-8,
            max_iterations: 500,
            residual_tolerance: 1e-6,
        }
    }
}

/// Apparent power injections `s = v ⊙ conj(Y v)`.
pub fn apparent_power(v: &CVector, model: &AdmittanceModel) -> Result<CVector> {
    let i = model.currents(v)?;
    Ok(v.zip_map(&i, |vk, ik| vk * ik.conj()))
}

/// Solve for bus voltages given injections at every bus (the slack entry is ignored).
pub fn solve_voltages(
    model: &AdmittanceModel,
    injections: &CVector,
    slack_voltage: Complex64,
) -> Result<CVector> {
    solve_voltages_with(
        model,
        injections,
        slack_voltage,
        PowerFlowOptions::default(),
    )
}

pub fn solve_voltages_with(
    model: &AdmittanceModel,
    injections: &CVector,
    slack_voltage: Complex64,
    opts: PowerFlowOptions,
) -> Result<CVector> {
    let n = model.node_count;
    if injections.len() != n {
        return Err(Error::Dimension(format!(
            "{} injections for {n} buses",
            injections.len()
        )));
    }
    let slack = model.slack;
    let others: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = others.len();
    let y_nn = CMatrix::from_fn(m, m, |a, b| model.y[(others[a], others[b])]);
    let y_ns = CVector::from_fn(m, |a, _| model.y[(others[a], slack)]);
    let lu = y_nn.lu();
    if !lu.is_invertible() {
        return Err(Error::Singular("non-slack admittance block"));
    }
    let s_n = CVector::from_fn(m, |a, _| injections[others[a]]);
    let source = &y_ns * slack_voltage;

    let mut v_n = CVector::from_element(m, slack_voltage);
    let mut converged = false;
    let mut step = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let rhs = CVector::from_fn(m, |a, _| (s_n[a] / v_n[a]).conj() - source[a]);
        let next = lu
            .solve(&rhs)
            .ok_or(Error::Singular("non-slack admittance block"))?;
        if !next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            break;
        }
        step = inf_norm(&(&next - &v_n));
        v_n = next;
        if step <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: opts.max_iterations,
            mismatch: step,
        });
    }

    let mut v = CVector::zeros(n);
    v[slack] = slack_voltage;
    for (a, &i) in others.iter().enumerate() {
        v[i] = v_n[a];
    }
    let s = apparent_power(&v, model)?;
    let mismatch = others
        .iter()
        .map(|&i| (s[i] - injections[i]).norm())
        .fold(0.0, f64::max);
    if mismatch > opts.residual_tolerance {
        return Err(Error::NonConvergence {
            iterations: opts.max_iterations,
            mismatch,
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_admittance, Branch};
    use crate::linalg::{random_vector, rng, ZERO};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_injection_gives_flat_profile() {
        let branches = [
            Branch::new(0, 1, c(1.0, -5.0)),
            Branch::new(1, 2, c(2.0, -8.0)),
        ];
        let m = build_admittance(&branches, 3, 0).unwrap();
        let slack = Complex64::from_polar(1.02, 0.1);
        let v = solve_voltages(&m, &CVector::zeros(3), slack).unwrap();
        for z in v.iter() {
            assert!((z - slack).norm() < 1e-12);
        }
    }

    #[test]
    fn two_bus_matches_quadratic() {
        let y = c(0.0, -10.0);
        let m = build_admittance(&[Branch::new(0, 1, y)], 2, 0).unwrap();
        let s1 = c(0.1, 0.05);
        let v = solve_voltages(&m, &CVector::from_vec(vec![ZERO, s1]), c(1.0, 0.0)).unwrap();

        // s1 = conj(y) (|v1|^2 - v1) with v0 = 1; solve for v1 = a + jb.
        let w = s1 / y.conj();
        let b = -w.im;
        let a = (1.0 + (1.0 - 4.0 * (b * b - w.re)).sqrt()) / 2.0;
        assert!((v[1] - c(a, b)).norm() < 1e-9, "{} vs {}", v[1], c(a, b));
    }

    #[test]
    fn random_five_bus_residual() {
        let mut r = rng(8);
        let mut branches = Vec::new();
        for k in 1..5 {
            branches.push(Branch::new(r.random_range(0..k), k, c(2.0, -12.0)));
        }
        branches.push(Branch::new(0, 4, c(1.0, -6.0)));
        let m = build_admittance(&branches, 5, 0).unwrap();
        let mut s = random_vector(&mut r, 5) * c(0.05, 0.0);
        s[0] = ZERO;
        let v = solve_voltages(&m, &s, c(1.0, 0.0)).unwrap();
        let calc = apparent_power(&v, &m).unwrap();
        for i in 1..5 {
            assert!((calc[i] - s[i]).norm() <= 1e-6);
        }
    }

    #[test]
    fn infeasible_load_fails_to_converge() {
        let m = build_admittance(&[Branch::new(0, 1, c(0.0, -1.0))], 2, 0).unwrap();
        let err = solve_voltages(
            &m,
            &CVector::from_vec(vec![ZERO, c(-5.0, -5.0)]),
            c(1.0, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn apparent_power_basics() {
        let branches = [
            Branch::new(0, 1, c(1.0, -3.0)),
            Branch::new(1, 2, c(1.0, -3.0)),
        ];
        let m = build_admittance(&branches, 3, 0).unwrap();
        let zero = apparent_power(&CVector::zeros(3), &m).unwrap();
        assert!(zero.iter().all(|z| *z == ZERO));
        let flat = apparent_power(&CVector::from_element(3, c(1.0, 0.0)), &m).unwrap();
        assert!(flat.norm() < 1e-14);
        assert!(apparent_power(&CVector::zeros(2), &m).is_err());
    }

    #[test]
    fn apparent_power_matches_scalar_loop() {
        let mut r = rng(4);
        let branches = [
            Branch::new(0, 1, c(1.0, -3.0)),
            Branch::new(1, 2, c(2.0, -5.0)),
            Branch::new(2, 3, c(1.5, -4.0)),
            Branch::new(3, 0, c(0.7, -2.0)),
        ];
        let m = build_admittance(&branches, 4, 0).unwrap();
        let v = random_vector(&mut r, 4);
        let s = apparent_power(&v, &m).unwrap();
        for i in 0..4 {
            let mut cur = ZERO;
            for j in 0..4 {
                cur += m.y[(i, j)] * v[j];
            }
            assert!((s[i] - v[i] * cur.conj()).norm() < 1e-13);
        }
    }
}
