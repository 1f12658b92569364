use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_admittance_with_shunts, AdmittanceModel, Branch, PhasorSeries, Quantity};
use crate::error::{Error, Result};
use crate::linalg::{rng, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split evenly between the ends.
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuntRecord {
    pub bus: usize,
    pub g: f64,
    pub b: f64,
}

/// On-disk grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub node_count: usize,
    pub slack: usize,
    pub branches: Vec<BranchRecord>,
    #[serde(default)]
    pub shunts: Vec<ShuntRecord>,
}

impl GridFile {
    pub fn load(path: impl AsRef<Path>) -> Result<GridFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn to_model(&self) -> Result<AdmittanceModel> {
        let branches = self
            .branches
            .iter()
            .map(|b| Branch::from_impedance(b.from, b.to, b.r, b.x, b.b))
            .collect::<Result<Vec<_>>>()?;
        let mut shunts = vec![Complex64::new(0.0, 0.0); self.node_count];
        for s in &self.shunts {
            if s.bus >= self.node_count {
                return Err(Error::IndexOutOfRange {
                    index: s.bus,
                    node_count: self.node_count,
                });
            }
            shunts[s.bus] += Complex64::new(s.g, s.b);
        }
        build_admittance_with_shunts(&branches, &shunts, self.node_count, self.slack)
    }

    /// Seeded meshed test grid: a random spanning tree whose parents are drawn
    /// from the few most recent buses, plus `extra` chords between nearby buses.
    /// Line charging and bus shunts are zero.
    pub fn synthetic(node_count: usize, extra: usize, seed: u64) -> GridFile {
        let mut r = rng(seed);
        let mut edges = BTreeSet::new();
        let mut branches = Vec::new();
        let mut push = |r: &mut rand_chacha::ChaCha8Rng,
                        a: usize,
                        b: usize,
                        branches: &mut Vec<BranchRecord>| {
            let key = (a.min(b), a.max(b));
            if a == b || !edges.insert(key) {
                return false;
            }
            let x: f64 = r.random_range(0.05..0.25);
            let ratio: f64 = r.random_range(0.1..0.4);
            branches.push(BranchRecord {
                from: key.0,
                to: key.1,
                r: round6(x * ratio),
                x: round6(x),
                b: 0.0,
            });
            true
        };
        for k in 1..node_count {
            let lo = k.saturating_sub(4);
            let parent = r.random_range(lo..k);
            push(&mut r, parent, k, &mut branches);
        }
        let mut added = 0;
        let mut attempts = 0;
        while added < extra && attempts < 100 * (extra + 1) && node_count > 2 {
            attempts += 1;
            let a = r.random_range(0..node_count);
            let span = r.random_range(2..=6usize);
            let b = (a + span).min(node_count - 1);
            if push(&mut r, a, b, &mut branches) {
                added += 1;
            }
        }
        GridFile {
            node_count,
            slack: 0,
            branches,
            shunts: Vec::new(),
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// One row of the phasor CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorRecord {
    pub t: usize,
    pub bus: usize,
    pub re: f64,
    pub im: f64,
    pub quantity: Quantity,
}

/// Write series as `t,bus,re,im,quantity` rows.
pub fn write_phasor_csv<W: Write>(out: &mut W, series: &[&PhasorSeries]) -> Result<()> {
    writeln!(out, "t,bus,re,im,quantity")?;
    for s in series {
        for t in 0..s.steps() {
            for bus in 0..s.node_count() {
                let z = s.values[(bus, t)];
                writeln!(
                    out,
                    "{t},{bus},{:e},{:e},{}",
                    z.re,
                    z.im,
                    s.quantity.as_str()
                )?;
            }
        }
    }
    Ok(())
}

/// Read every series of the requested quantity from a phasor CSV.
pub fn read_phasor_csv<R: BufRead>(
    input: R,
    quantity: Quantity,
    step_hours: f64,
) -> Result<PhasorSeries> {
    let mut records = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::InvalidArgument(format!("malformed phasor row {}: {line}", lineno + 1));
        if fields.len() != 5 {
            return Err(bad());
        }
        let q = Quantity::parse(fields[4]).ok_or_else(bad)?;
        if q != quantity {
            continue;
        }
        records.push(PhasorRecord {
            t: fields[0].parse().map_err(|_| bad())?,
            bus: fields[1].parse().map_err(|_| bad())?,
            re: fields[2].parse().map_err(|_| bad())?,
            im: fields[3].parse().map_err(|_| bad())?,
            quantity: q,
        });
    }
    let steps = records.iter().map(|r| r.t + 1).max().unwrap_or(0);
    let buses = records.iter().map(|r| r.bus + 1).max().unwrap_or(0);
    let mut values = CMatrix::zeros(buses, steps);
    for r in &records {
        values[(r.bus, r.t)] = Complex64::new(r.re, r.im);
    }
    PhasorSeries::new(values, quantity, step_hours)
}
