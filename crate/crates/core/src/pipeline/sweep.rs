use num_complex::Complex64;

use super::config::{BoundSweep, RunConfig};
use crate::bounds::{run_bound_experiment, BoundKind, BoundReport, FilterNetwork, WorstCaseTarget};
use crate::error::Result;
use crate::grid::GridFile;
use crate::linalg::{complex_normal, random_matrix, rng, sigma_max, CMatrix};

/// Admittance matrix scaled to unit spectral norm.
pub fn normalized_shift(y: &CMatrix) -> CMatrix {
    let norm = sigma_max(y);
    y / Complex64::new(norm, 0.0)
}

/// Seeded filter pair, or two-layer network pair, of the given kind and order.
/// Nominal taps are `O(0.5)` and perturbations `O(0.05)`.
pub fn random_target(
    kind: BoundKind,
    nodes: usize,
    order: usize,
    inputs: usize,
    seed: u64,
) -> WorstCaseTarget {
    let mut r = rng(seed ^ ((order as u64) << 32) ^ 0x5eed);
    let scale = |z: Complex64, a: f64| z * a;
    let h: Vec<Complex64> = (0..=order)
        .map(|_| scale(complex_normal(&mut r), 0.5))
        .collect();
    let h_hat: Vec<Complex64> = h
        .iter()
        .map(|z| z + scale(complex_normal(&mut r), 0.05))
        .collect();
    match kind {
        BoundKind::Transfer => WorstCaseTarget::Transfer { h, h_hat },
        BoundKind::Permutation => WorstCaseTarget::Permutation { h },
        BoundKind::Gcn => WorstCaseTarget::Gcn { h, h_hat },
        BoundKind::Layer => {
            let width = nodes.div_ceil(2).max(2);
            let c = |a: f64| Complex64::new(a, 0.0);
            let t1 = random_matrix(&mut r, width, nodes) * c(0.3);
            let t2 = random_matrix(&mut r, 2, width) * c(0.3);
            let t1_hat = &t1 + random_matrix(&mut r, width, nodes) * c(0.02);
            let t2_hat = &t2 + random_matrix(&mut r, 2, width) * c(0.02);
            WorstCaseTarget::Layer {
                net: FilterNetwork {
                    h,
                    layers: vec![t1, t2],
                },
                net_hat: FilterNetwork {
                    h: h_hat,
                    layers: vec![t1_hat, t2_hat],
                },
                inputs,
            }
        }
    }
}

/// Number of rows [`bound_sweep`] produces.
pub fn sweep_size(sweep: &BoundSweep) -> usize {
    sweep.nodes.len().max(1)
        * sweep.orders.len()
        * sweep.seeds
        * sweep.eps.len()
        * sweep.kinds.len()
}

/// Every (graph, order, seed, ε, kind) combination of the sweep, in that
/// nesting order. Graphs are the configured grid, or synthetic grids of the
/// listed sizes, each scaled to unit norm.
pub fn bound_sweep(cfg: &RunConfig) -> Result<Vec<BoundReport>> {
    let sweep = &cfg.bounds;
    let mut rows = Vec::with_capacity(sweep_size(sweep));
    for seed in cfg.seed..cfg.seed + sweep.seeds as u64 {
        let graphs: Vec<CMatrix> = if sweep.nodes.is_empty() {
            vec![normalized_shift(&cfg.load_grid()?.1.y)]
        } else {
            sweep
                .nodes
                .iter()
                .map(|&n| {
                    Ok(normalized_shift(
                        &GridFile::synthetic(n, n / 3, seed).to_model()?.y,
                    ))
                })
                .collect::<Result<_>>()?
        };
        for s in &graphs {
            for &order in &sweep.orders {
                for &eps in &sweep.eps {
                    for &kind in &sweep.kinds {
                        let target = random_target(kind, s.nrows(), order, sweep.inputs, seed);
                        let id = format!("n{}-k{order}-s{seed}", s.nrows());
                        rows.push(run_bound_experiment(
                            &id,
                            s,
                            &target,
                            eps,
                            sweep.trials,
                            seed,
                            &sweep.constants,
                        )?);
                    }
                }
            }
        }
    }
    // Group by graph, then order, then seed.
    rows.sort_by(|a, b| (a.nodes, a.order, a.seed).cmp(&(b.nodes, b.order, b.seed)));
    Ok(rows)
}
