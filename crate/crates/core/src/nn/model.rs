use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{shifted_powers, temporal_conv, LayerGso};
use super::tensor::{crelu_backward, crelu_matrix, sigmoid, split_tanh};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, rng, CMatrix, CVector};
use crate::serial::ComplexPlanes;

pub const CHECKPOINT_FORMAT: &str = "gridgcn-stgcn";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Complex output through split-tanh.
    Regression,
    /// Real output over stacked `[Re h; Im h]` through a sigmoid.
    Classification,
}

/// Shape hyperparameters of a Cplx-STGCN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StgcnConfig {
    pub nodes: usize,
    /// Window length `T`.
    pub window: usize,
    /// Temporal channels `K_t`.
    pub temporal_channels: usize,
    /// Highest shift power `K`; the layer holds `H_0 ..= H_K`.
    pub order: usize,
    /// Graph channels `G`.
    pub graph_channels: usize,
    pub hidden: Vec<usize>,
    pub head: HeadKind,
    pub outputs: usize,
    /// Feed `S / σ_max(S)` to the layers instead of `S`.
    pub normalize_gso: bool,
}

impl StgcnConfig {
    /// Full-size defaults: `K = 5`, `K_t = G = T = 10`, two hidden layers of 512.
    pub fn standard(nodes: usize, head: HeadKind, outputs: usize) -> Self {
        StgcnConfig {
            nodes,
            window: 10,
            temporal_channels: 10,
            order: 5,
            graph_channels: 10,
            hidden: vec![512, 512],
            head,
            outputs,
            normalize_gso: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("nodes", self.nodes),
            ("window", self.window),
            ("temporal_channels", self.temporal_channels),
            ("graph_channels", self.graph_channels),
            ("outputs", self.outputs),
        ];
        for (name, d) in dims {
            if d == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(
                "hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Length of the flattened graph-conv output.
    pub fn flat_width(&self) -> usize {
        self.nodes * self.graph_channels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: CMatrix,
    pub bias: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputHead {
    Complex(DenseLayer),
    Real {
        weight: DMatrix<f64>,
        bias: DVector<f64>,
    },
}

/// Trainable tensors of the network. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub gamma: CMatrix,
    pub h: Vec<CMatrix>,
    pub graph_bias: CVector,
    pub hidden: Vec<DenseLayer>,
    pub head: OutputHead,
}

enum Slot<'a> {
    Complex(&'a mut [Complex64]),
    Real(&'a mut [f64]),
}

impl Parameters {
    fn zeros(config: &StgcnConfig) -> Self {
        let c = config;
        let mut width = c.flat_width();
        let mut hidden = Vec::with_capacity(c.hidden.len());
        for &w in &c.hidden {
            hidden.push(DenseLayer {
                weight: CMatrix::zeros(w, width),
                bias: CVector::zeros(w),
            });
            width = w;
        }
        let head = match c.head {
            HeadKind::Regression => OutputHead::Complex(DenseLayer {
                weight: CMatrix::zeros(c.outputs, width),
                bias: CVector::zeros(c.outputs),
            }),
            HeadKind::Classification => OutputHead::Real {
                weight: DMatrix::zeros(c.outputs, 2 * width),
                bias: DVector::zeros(c.outputs),
            },
        };
        Parameters {
            gamma: CMatrix::zeros(c.window, c.temporal_channels),
            h: vec![CMatrix::zeros(c.temporal_channels, c.graph_channels); c.order + 1],
            graph_bias: CVector::zeros(c.graph_channels),
            hidden,
            head,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.visit_mut(|x| *x = 0.0);
        out
    }

    fn slots(&mut self) -> Vec<(String, Slot<'_>)> {
        let mut out = vec![(
            "gamma".to_string(),
            Slot::Complex(self.gamma.as_mut_slice()),
        )];
        for (k, h) in self.h.iter_mut().enumerate() {
            out.push((format!("h{k}"), Slot::Complex(h.as_mut_slice())));
        }
        out.push((
            "graph_bias".into(),
            Slot::Complex(self.graph_bias.as_mut_slice()),
        ));
        for (l, d) in self.hidden.iter_mut().enumerate() {
            out.push((
                format!("hidden{l}.weight"),
                Slot::Complex(d.weight.as_mut_slice()),
            ));
            out.push((
                format!("hidden{l}.bias"),
                Slot::Complex(d.bias.as_mut_slice()),
            ));
        }
        match &mut self.head {
            OutputHead::Complex(d) => {
                out.push(("head.weight".into(), Slot::Complex(d.weight.as_mut_slice())));
                out.push(("head.bias".into(), Slot::Complex(d.bias.as_mut_slice())));
            }
            OutputHead::Real { weight, bias } => {
                out.push(("head.weight".into(), Slot::Real(weight.as_mut_slice())));
                out.push(("head.bias".into(), Slot::Real(bias.as_mut_slice())));
            }
        }
        out
    }

    /// Visit every real scalar (each complex entry as re then im) in a fixed order.
    pub fn visit_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for (_, slot) in self.slots() {
            match slot {
                Slot::Complex(zs) => {
                    for z in zs {
                        f(&mut z.re);
                        f(&mut z.im);
                    }
                }
                Slot::Real(xs) => xs.iter_mut().for_each(&mut f),
            }
        }
    }

    /// Tensor names with their number of real scalars, in [`Self::to_flat`] order.
    pub fn layout(&self) -> Vec<(String, usize)> {
        let mut copy = self.clone();
        copy.slots()
            .into_iter()
            .map(|(name, slot)| {
                let len = match slot {
                    Slot::Complex(zs) => 2 * zs.len(),
                    Slot::Real(xs) => xs.len(),
                };
                (name, len)
            })
            .collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.layout().iter().map(|(_, n)| n).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().visit_mut(|x| out.push(*x));
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.scalar_count();
        if flat.len() != n {
            return Err(Error::Dimension(format!(
                "{} values for {n} parameters",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        self.visit_mut(|x| *x = *it.next().unwrap());
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &Parameters, scale: f64) -> Result<()> {
        let flat = other.to_flat();
        if flat.len() != self.scalar_count() {
            return Err(Error::Dimension(
                "parameter sets of different shapes".into(),
            ));
        }
        let mut it = flat.iter();
        self.visit_mut(|x| *x += scale * it.next().unwrap());
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }
}

/// Gradient of a scalar loss with respect to every parameter.
///
/// Complex entries hold `∂L/∂Re + j ∂L/∂Im`; real entries hold `∂L/∂p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub Parameters);

impl GradientSet {
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.to_flat()
    }

    pub fn accumulate(&mut self, other: &GradientSet, scale: f64) -> Result<()> {
        self.0.add_scaled(&other.0, scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_flat().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Network output; also the shape of an upstream loss gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Regression(CVector),
    Classification(DVector<f64>),
}

/// Everything [`StgcnModel::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    s: CMatrix,
    x: CMatrix,
    powers: Vec<CMatrix>,
    graph_pre: CMatrix,
    /// Inputs of each dense layer including the head.
    inputs: Vec<CVector>,
    hidden_pre: Vec<CVector>,
    /// Regression head output before the output scaling.
    squashed: Option<CVector>,
    pub output: Prediction,
}

/// Fixed affine map between bus voltages and the network's working range.
///
/// Windows enter as `(x − offset) / scale` and regression outputs leave as
/// `offset + scale · y`, so near-unit voltages are not squeezed against the
/// tanh ceiling. Not trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    /// Per-bus center.
    pub offset: CVector,
    pub scale: f64,
}

impl Scaling {
    /// Center on the per-bus mean of `windows`; scale so every real and
    /// imaginary part lands within ±0.5.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a CMatrix>) -> Result<Scaling> {
        let windows: Vec<&CMatrix> = windows.into_iter().collect();
        let first = windows
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot fit scaling on no windows".into()))?;
        let n = first.nrows();
        let mut offset = CVector::zeros(n);
        let mut count = 0usize;
        for w in &windows {
            if w.nrows() != n {
                return Err(Error::Dimension("windows differ in node count".into()));
            }
            for col in w.column_iter() {
                offset += col;
            }
            count += w.ncols();
        }
        offset /= Complex64::new(count as f64, 0.0);
        let spread = windows
            .iter()
            .flat_map(|w| {
                w.column_iter().flat_map(|c| {
                    (c - &offset)
                        .iter()
                        .map(|z| z.re.abs().max(z.im.abs()))
                        .collect::<Vec<_>>()
                })
            })
            .fold(0.0f64, f64::max);
        let scaling = Scaling {
            offset,
            scale: if spread > 0.0 { 2.0 * spread } else { 1.0 },
        };
        scaling.check(n)?;
        Ok(scaling)
    }

    fn check(&self, nodes: usize) -> Result<()> {
        if self.offset.len() != nodes {
            return Err(Error::Dimension(format!(
                "scaling for {} nodes on a {nodes}-node model",
                self.offset.len()
            )));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() || !all_finite(&self.offset) {
            return Err(Error::InvalidArgument(
                "scaling must be finite with a positive scale".into(),
            ));
        }
        Ok(())
    }

    fn inward(&self, x: &CMatrix) -> CMatrix {
        let inv = 1.0 / self.scale;
        CMatrix::from_fn(x.nrows(), x.ncols(), |v, t| {
            (x[(v, t)] - self.offset[v]) * inv
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StgcnModel {
    config: StgcnConfig,
    params: Parameters,
    scaling: Option<Scaling>,
    version: u64,
}

fn glorot<R: Rng>(r: &mut R, m: &mut [Complex64], fan_in: usize, fan_out: usize) {
    let a = (3.0 / (fan_in + fan_out) as f64).sqrt();
    for z in m {
        *z = Complex64::new(r.random_range(-a..a), r.random_range(-a..a));
    }
}

fn vec_column_major(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

impl StgcnModel {
    pub fn zeros(config: StgcnConfig) -> Result<Self> {
        config.validate()?;
        let params = Parameters::zeros(&config);
        Ok(StgcnModel {
            config,
            params,
            scaling: None,
            version: 0,
        })
    }

    /// Glorot-style initialization with zero biases.
    pub fn init(config: StgcnConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let c = model.config.clone();
        let mut r = rng(seed);
        let p = &mut model.params;
        glorot(
            &mut r,
            p.gamma.as_mut_slice(),
            c.window,
            c.temporal_channels,
        );
        for h in &mut p.h {
            glorot(
                &mut r,
                h.as_mut_slice(),
                c.temporal_channels,
                c.graph_channels,
            );
        }
        for d in &mut p.hidden {
            let (o, i) = d.weight.shape();
            glorot(&mut r, d.weight.as_mut_slice(), i, o);
        }
        match &mut p.head {
            OutputHead::Complex(d) => {
                let (o, i) = d.weight.shape();
                glorot(&mut r, d.weight.as_mut_slice(), i, o);
            }
            OutputHead::Real { weight, .. } => {
                let (o, i) = weight.shape();
                let a = (6.0 / (i + o) as f64).sqrt();
                for w in weight.iter_mut() {
                    *w = r.random_range(-a..a);
                }
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &StgcnConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn scaling(&self) -> Option<&Scaling> {
        self.scaling.as_ref()
    }

    /// Install an input/output scaling. Regression heads must predict every bus.
    pub fn set_scaling(&mut self, scaling: Option<Scaling>) -> Result<()> {
        if let Some(sc) = &scaling {
            sc.check(self.config.nodes)?;
            if self.config.head == HeadKind::Regression && self.config.outputs != self.config.nodes
            {
                return Err(Error::InvalidArgument(
                    "output scaling needs one regression output per bus".into(),
                ));
            }
        }
        self.version += 1;
        self.scaling = scaling;
        Ok(())
    }

    /// Mutable access; invalidates caches from earlier forward passes.
    pub fn params_mut(&mut self) -> &mut Parameters {
        self.version += 1;
        &mut self.params
    }

    pub fn forward(&self, gso: &LayerGso, x: &CMatrix) -> Result<ForwardCache> {
        let c = &self.config;
        if gso.node_count() != c.nodes || x.nrows() != c.nodes || x.ncols() != c.window {
            return Err(Error::Dimension(format!(
                "model expects {} nodes and window {}, got {}x{} window on {} nodes",
                c.nodes,
                c.window,
                x.nrows(),
                x.ncols(),
                gso.node_count()
            )));
        }
        let p = &self.params;
        let x = match &self.scaling {
            Some(sc) => sc.inward(x),
            None => x.clone(),
        };
        let xbar = temporal_conv(&p.gamma, &x)?;
        let powers = shifted_powers(&gso.matrix, &xbar, c.order);
        let mut graph_pre = CMatrix::zeros(c.nodes, c.graph_channels);
        for (pk, hk) in powers.iter().zip(&p.h) {
            graph_pre += pk * hk;
        }
        for (mut col, b) in graph_pre.column_iter_mut().zip(p.graph_bias.iter()) {
            col.add_scalar_mut(*b);
        }
        let mut act = vec_column_major(&crelu_matrix(&graph_pre));
        let mut inputs = Vec::with_capacity(p.hidden.len() + 1);
        let mut hidden_pre = Vec::with_capacity(p.hidden.len());
        for d in &p.hidden {
            let pre = &d.weight * &act + &d.bias;
            inputs.push(act);
            act = pre.map(super::tensor::crelu);
            hidden_pre.push(pre);
        }
        let squashed = match &p.head {
            OutputHead::Complex(d) => Some((&d.weight * &act + &d.bias).map(split_tanh)),
            OutputHead::Real { .. } => None,
        };
        let output = match &p.head {
            OutputHead::Complex(_) => {
                let y = squashed.clone().expect("complex head");
                Prediction::Regression(match &self.scaling {
                    Some(sc) => &sc.offset + y * Complex64::new(sc.scale, 0.0),
                    None => y,
                })
            }
            OutputHead::Real { weight, bias } => {
                let stacked = stack_parts(&act);
                Prediction::Classification((weight * stacked + bias).map(sigmoid))
            }
        };
        inputs.push(act);
        let finite = match &output {
            Prediction::Regression(y) => all_finite(y),
            Prediction::Classification(y) => y.iter().all(|v| v.is_finite()),
        };
        if !finite || !all_finite(&graph_pre) {
            return Err(Error::NonFinite("activation in forward pass".into()));
        }
        Ok(ForwardCache {
            version: self.version,
            s: gso.matrix.clone(),
            x,
            powers,
            graph_pre,
            inputs,
            hidden_pre,
            squashed,
            output,
        })
    }

    pub fn predict(&self, gso: &LayerGso, x: &CMatrix) -> Result<Prediction> {
        Ok(self.forward(gso, x)?.output)
    }

    /// Gradients of a scalar loss given its gradient with respect to the output.
    ///
    /// For a regression head `upstream` holds `∂L/∂Re y + j ∂L/∂Im y`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Prediction) -> Result<GradientSet> {
        if cache.version != self.version {
            return Err(Error::StaleCache(
                "parameters changed since the forward pass",
            ));
        }
        let p = &self.params;
        let c = &self.config;
        let mut grads = p.zeros_like();
        let head_input = cache.inputs.last().expect("head input cached");

        let mut g_act = match (&p.head, &cache.output, upstream) {
            (OutputHead::Complex(d), Prediction::Regression(_), Prediction::Regression(gy)) => {
                let y = cache.squashed.as_ref().expect("regression cache");
                check_len(gy.len(), y.len())?;
                let gain = self.scaling.as_ref().map_or(1.0, |sc| sc.scale);
                let g_pre = y.zip_map(gy, |yv, g| {
                    let g = g * gain;
                    Complex64::new(g.re * (1.0 - yv.re * yv.re), g.im * (1.0 - yv.im * yv.im))
                });
                if let OutputHead::Complex(gd) = &mut grads.head {
                    gd.weight = &g_pre * head_input.adjoint();
                    gd.bias = g_pre.clone();
                }
                d.weight.ad_mul(&g_pre)
            }
            (
                OutputHead::Real { weight, .. },
                Prediction::Classification(y),
                Prediction::Classification(gy),
            ) => {
                check_len(gy.len(), y.len())?;
                let g_pre = y.zip_map(gy, |yv, g| g * yv * (1.0 - yv));
                let stacked = stack_parts(head_input);
                if let OutputHead::Real {
                    weight: gw,
                    bias: gb,
                } = &mut grads.head
                {
                    *gw = &g_pre * stacked.transpose();
                    *gb = g_pre.clone();
                }
                let u = weight.tr_mul(&g_pre);
                let n = head_input.len();
                CVector::from_fn(n, |i, _| Complex64::new(u[i], u[n + i]))
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "upstream gradient does not match the model head".into(),
                ))
            }
        };

        for l in (0..p.hidden.len()).rev() {
            let pre = &cache.hidden_pre[l];
            let g_pre = crelu_backward(pre, &g_act);
            grads.hidden[l].weight = &g_pre * cache.inputs[l].adjoint();
            grads.hidden[l].bias = g_pre.clone();
            g_act = p.hidden[l].weight.ad_mul(&g_pre);
        }

        let g_w = CMatrix::from_column_slice(c.nodes, c.graph_channels, g_act.as_slice());
        let g_pre = crelu_backward(&cache.graph_pre, &g_w);
        for (k, pk) in cache.powers.iter().enumerate() {
            grads.h[k] = pk.ad_mul(&g_pre);
        }
        grads.graph_bias = CVector::from_fn(c.graph_channels, |g, _| g_pre.column(g).sum());
        // G_X̄ = Σ_k (S^H)^k G H_k^H, by Horner.
        let s_h = cache.s.adjoint();
        let mut g_xbar = &g_pre * p.h[c.order].adjoint();
        for k in (0..c.order).rev() {
            g_xbar = &s_h * g_xbar + &g_pre * p.h[k].adjoint();
        }
        grads.gamma = cache.x.ad_mul(&g_xbar);
        Ok(GradientSet(grads))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint::from_model(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<Checkpoint>(text)?.into_model()
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "gradient of length {got} for output of length {want}"
        )));
    }
    Ok(())
}

fn stack_parts(h: &CVector) -> DVector<f64> {
    let n = h.len();
    DVector::from_fn(2 * n, |i, _| if i < n { h[i].re } else { h[i - n].im })
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    weight: ComplexPlanes,
    bias: ComplexPlanes,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum HeadFile {
    Complex(DenseFile),
    Real {
        rows: usize,
        cols: usize,
        /// Row-major.
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: StgcnConfig,
    gamma: ComplexPlanes,
    h: Vec<ComplexPlanes>,
    graph_bias: ComplexPlanes,
    hidden: Vec<DenseFile>,
    head: HeadFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingFile>,
}

#[derive(Serialize, Deserialize)]
struct ScalingFile {
    offset: ComplexPlanes,
    scale: f64,
}

impl Checkpoint {
    fn from_model(m: &StgcnModel) -> Self {
        let p = &m.params;
        let dense = |d: &DenseLayer| DenseFile {
            weight: ComplexPlanes::from_matrix(&d.weight),
            bias: ComplexPlanes::from_vector(&d.bias),
        };
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: m.config.clone(),
            gamma: ComplexPlanes::from_matrix(&p.gamma),
            h: p.h.iter().map(ComplexPlanes::from_matrix).collect(),
            graph_bias: ComplexPlanes::from_vector(&p.graph_bias),
            hidden: p.hidden.iter().map(dense).collect(),
            head: match &p.head {
                OutputHead::Complex(d) => HeadFile::Complex(dense(d)),
                OutputHead::Real { weight, bias } => HeadFile::Real {
                    rows: weight.nrows(),
                    cols: weight.ncols(),
                    weight: weight.transpose().as_slice().to_vec(),
                    bias: bias.as_slice().to_vec(),
                },
            },
            scaling: m.scaling.as_ref().map(|sc| ScalingFile {
                offset: ComplexPlanes::from_vector(&sc.offset),
                scale: sc.scale,
            }),
        }
    }

    fn into_model(self) -> Result<StgcnModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut model = StgcnModel::zeros(self.config)?;
        let dense = |f: &DenseFile| -> Result<DenseLayer> {
            Ok(DenseLayer {
                weight: f.weight.to_matrix()?,
                bias: f.bias.to_vector()?,
            })
        };
        let loaded = Parameters {
            gamma: self.gamma.to_matrix()?,
            h: self
                .h
                .iter()
                .map(|h| h.to_matrix())
                .collect::<Result<_>>()?,
            graph_bias: self.graph_bias.to_vector()?,
            hidden: self.hidden.iter().map(dense).collect::<Result<_>>()?,
            head: match &self.head {
                HeadFile::Complex(d) => OutputHead::Complex(dense(d)?),
                HeadFile::Real {
                    rows,
                    cols,
                    weight,
                    bias,
                } => {
                    if weight.len() != rows * cols
                        || !weight.iter().chain(bias).all(|x| x.is_finite())
                    {
                        return Err(Error::Dimension("malformed real head".into()));
                    }
                    OutputHead::Real {
                        weight: DMatrix::from_row_slice(*rows, *cols, weight),
                        bias: DVector::from_vec(bias.clone()),
                    }
                }
            },
        };
        if !same_shapes(&model.params, &loaded) {
            return Err(Error::Dimension(
                "checkpoint tensors do not match its config".into(),
            ));
        }
        model.params = loaded;
        if let Some(sc) = &self.scaling {
            model.set_scaling(Some(Scaling {
                offset: sc.offset.to_vector()?,
                scale: sc.scale,
            }))?;
        }
        Ok(model)
    }
}

fn same_shapes(a: &Parameters, b: &Parameters) -> bool {
    let head_shape = |h: &OutputHead| match h {
        OutputHead::Complex(d) => (0, d.weight.shape(), d.bias.len()),
        OutputHead::Real { weight, bias } => (1, weight.shape(), bias.len()),
    };
    a.gamma.shape() == b.gamma.shape()
        && a.h.len() == b.h.len()
        && a.h.iter().zip(&b.h).all(|(x, y)| x.shape() == y.shape())
        && a.graph_bias.len() == b.graph_bias.len()
        && a.hidden.len() == b.hidden.len()
        && a.hidden
            .iter()
            .zip(&b.hidden)
            .all(|(x, y)| x.weight.shape() == y.weight.shape() && x.bias.len() == y.bias.len())
        && head_shape(&a.head) == head_shape(&b.head)
}
