use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO};

/// A transmission branch between two buses, per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub series_admittance: Complex64,
    /// Shunt admittance attached at the `from` end.
    #[serde(default)]
    pub shunt_from: Complex64,
    /// Shunt admittance attached at the `to` end.
    #[serde(default)]
    pub shunt_to: Complex64,
}

impl Branch {
    pub fn new(from: usize, to: usize, series_admittance: Complex64) -> Self {
        Branch {
            from,
            to,
            series_admittance,
            shunt_from: ZERO,
            shunt_to: ZERO,
        }
    }

    /// Pi-model line from series impedance `r + jx` and total charging susceptance `b`.
    pub fn from_impedance(from: usize, to: usize, r: f64, x: f64, b: f64) -> Result<Self> {
        let z = Complex64::new(r, x);
        if z.norm() == 0.0 {
            return Err(Error::InvalidBranch {
                from,
                to,
                reason: "zero series impedance",
            });
        }
        let half = Complex64::new(0.0, b / 2.0);
        Ok(Branch {
            from,
            to,
            series_admittance: z.inv(),
            shunt_from: half,
            shunt_to: half,
        })
    }
}

/// Complex symmetric bus admittance matrix; also serves as the graph shift operator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceModel {
    pub node_count: usize,
    pub slack: usize,
    pub y: CMatrix,
    pub branches: Vec<Branch>,
    /// Bus shunts (excluding line-charging halves carried by branches).
    pub bus_shunts: Vec<Complex64>,
}

impl AdmittanceModel {
    /// Total shunt admittance at each bus: bus shunts plus line-charging halves.
    pub fn shunt_vector(&self) -> CVector {
        let mut sh = CVector::from_vec(self.bus_shunts.clone());
        for b in &self.branches {
            sh[b.from] += b.shunt_from;
            sh[b.to] += b.shunt_to;
        }
        sh
    }

    /// Ohm's law `i = Y v`.
    pub fn currents(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.node_count {
            return Err(Error::Dimension(format!(
                "voltage vector of length {} for {} buses",
                v.len(),
                self.node_count
            )));
        }
        Ok(&self.y * v)
    }

    /// Buses adjacent to `bus` through at least one branch.
    pub fn neighbors(&self, bus: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .branches
            .iter()
            .filter_map(|b| {
                if b.from == bus {
                    Some(b.to)
                } else if b.to == bus {
                    Some(b.from)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Rebuild the model with branch `index` removed.
    pub fn without_branch(&self, index: usize) -> Result<AdmittanceModel> {
        if index >= self.branches.len() {
            return Err(Error::InvalidArgument(format!(
                "branch {index} does not exist ({} branches)",
                self.branches.len()
            )));
        }
        let mut branches = self.branches.clone();
        branches.remove(index);
        build_admittance_with_shunts(&branches, &self.bus_shunts, self.node_count, self.slack)
    }

    /// Insert `branch` at position `index`, undoing [`Self::without_branch`]
    /// exactly (the matrix is re-accumulated in the original order).
    pub fn with_branch(&self, index: usize, branch: Branch) -> Result<AdmittanceModel> {
        if index > self.branches.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot insert branch at {index} ({} branches)",
                self.branches.len()
            )));
        }
        let mut branches = self.branches.clone();
        branches.insert(index, branch);
        build_admittance_with_shunts(&branches, &self.bus_shunts, self.node_count, self.slack)
    }
}

/// Assemble the admittance matrix from a branch list with no bus shunts.
pub fn build_admittance(
    branches: &[Branch],
    node_count: usize,
    slack: usize,
) -> Result<AdmittanceModel> {
    build_admittance_with_shunts(branches, &vec![ZERO; node_count], node_count, slack)
}

pub fn build_admittance_with_shunts(
    branches: &[Branch],
    bus_shunts: &[Complex64],
    node_count: usize,
    slack: usize,
) -> Result<AdmittanceModel> {
    if branches.is_empty() {
        return Err(Error::InvalidArgument("branch list is empty".into()));
    }
    if bus_shunts.len() != node_count {
        return Err(Error::Dimension(format!(
            "{} bus shunts for {node_count} buses",
            bus_shunts.len()
        )));
    }
    if slack >= node_count {
        return Err(Error::IndexOutOfRange {
            index: slack,
            node_count,
        });
    }
    let mut y = CMatrix::zeros(node_count, node_count);
    for b in branches {
        for idx in [b.from, b.to] {
            if idx >= node_count {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    node_count,
                });
            }
        }
        if b.from == b.to {
            return Err(Error::InvalidBranch {
                from: b.from,
                to: b.to,
                reason: "self loop",
            });
        }
        if b.series_admittance == ZERO {
            return Err(Error::InvalidBranch {
                from: b.from,
                to: b.to,
                reason: "zero series admittance",
            });
        }
        let ys = b.series_admittance;
        y[(b.from, b.from)] += ys + b.shunt_from;
        y[(b.to, b.to)] += ys + b.shunt_to;
        y[(b.from, b.to)] -= ys;
        y[(b.to, b.from)] -= ys;
    }
    for (i, sh) in bus_shunts.iter().enumerate() {
        y[(i, i)] += sh;
    }
    check_connected(branches, node_count)?;
    Ok(AdmittanceModel {
        node_count,
        slack,
        y,
        branches: branches.to_vec(),
        bus_shunts: bus_shunts.to_vec(),
    })
}

fn check_connected(branches: &[Branch], node_count: usize) -> Result<()> {
    let mut adj = vec![Vec::new(); node_count];
    for b in branches {
        adj[b.from].push(b.to);
        adj[b.to].push(b.from);
    }
    let mut seen = vec![false; node_count];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    if reached != node_count {
        return Err(Error::Disconnected {
            reached,
            node_count,
        });
    }
    Ok(())
}
