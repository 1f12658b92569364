#![allow(dead_code)]

use gridgcn::linalg::{random_matrix, random_symmetric, random_vector, rng, CMatrix, CVector};
use gridgcn::nn::{
    sample_loss, sample_loss_and_grad, HeadKind, LossContext, Sample, Scaling, StgcnConfig,
    StgcnModel, Target,
};
use nalgebra::DVector;
use num_complex::Complex64;

/// Worst finite-difference disagreement for one parameter tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub scalars: usize,
    pub max_rel_error: f64,
}

pub fn tiny_config(head: HeadKind, outputs: usize) -> StgcnConfig {
    StgcnConfig {
        nodes: 5,
        window: 3,
        temporal_channels: 3,
        order: 2,
        graph_channels: 8,
        hidden: vec![8],
        head,
        outputs,
        normalize_gso: true,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    // Gradients below this are indistinguishable from finite-difference noise.
    if scale < 1e-8 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compare analytic gradients with central differences at `step` on every
/// real scalar of a seeded tiny model, optionally behind an input/output scaling.
pub fn gradient_check(
    head: HeadKind,
    mu2: f64,
    seed: u64,
    step: f64,
    scaled: bool,
) -> Vec<TensorCheck> {
    let mut r = rng(seed);
    let s = random_symmetric(&mut r, 5) * Complex64::new(2.0, 0.0);
    let observed = [0usize, 2, 3];
    let ctx = LossContext::new(&s, &observed, mu2, true).unwrap();
    let window: CMatrix = random_matrix(&mut r, 5, 3);
    let (outputs, target) = match head {
        HeadKind::Regression => (
            5,
            Target::Forecast {
                next: random_vector(&mut r, 5) * Complex64::new(0.5, 0.0),
                measured_power: Some(random_vector(&mut r, 3) * Complex64::new(0.3, 0.0)),
            },
        ),
        HeadKind::Classification => (3, Target::Labels(DVector::from_vec(vec![1.0, 0.0, 1.0]))),
    };
    let sample = Sample { window, target };
    let mut model = StgcnModel::init(tiny_config(head, outputs), seed + 1).unwrap();
    // Non-zero biases so their gradients are exercised away from the init.
    let mut br = rng(seed + 2);
    {
        let p = model.params_mut();
        p.graph_bias = random_vector(&mut br, p.graph_bias.len()) * Complex64::new(0.05, 0.0);
        for d in &mut p.hidden {
            d.bias = random_vector(&mut br, d.bias.len()) * Complex64::new(0.05, 0.0);
        }
    }
    if scaled {
        let offset = random_vector(&mut br, 5) * Complex64::new(0.1, 0.0);
        let offset = offset.map(|z| z + Complex64::new(0.95, -0.1));
        model
            .set_scaling(Some(Scaling { offset, scale: 0.3 }))
            .unwrap();
    }
    let (_, grads) = sample_loss_and_grad(&model, &ctx, &sample).unwrap();
    let analytic = grads.to_flat();
    let base = model.params().to_flat();
    let mut checks = Vec::new();
    let mut offset = 0;
    for (name, len) in model.params().layout() {
        let mut worst: f64 = 0.0;
        for i in offset..offset + len {
            let mut plus = base.clone();
            plus[i] += step;
            let mut minus = base.clone();
            minus[i] -= step;
            let mut mp = model.clone();
            mp.params_mut().assign_flat(&plus).unwrap();
            let mut mm = model.clone();
            mm.params_mut().assign_flat(&minus).unwrap();
            let fd = (sample_loss(&mp, &ctx, &sample).unwrap()
                - sample_loss(&mm, &ctx, &sample).unwrap())
                / (2.0 * step);
            worst = worst.max(rel(analytic[i], fd));
        }
        checks.push(TensorCheck {
            name,
            scalars: len,
            max_rel_error: worst,
        });
        offset += len;
    }
    checks
}

pub fn unit(v: &CVector) -> CVector {
    v / Complex64::new(v.norm(), 0.0)
}
