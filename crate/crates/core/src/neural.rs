//! Dense feed-forward networks with ReLU hidden layers, exact batched
//! backpropagation, Adam, and a flat binary checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::RngStream;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{what}: expected {expected}, got {found}")]
    Shape { what: &'static str, expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` by the derivative evaluated at pre-activation `pre`.
    fn backprop(self, pre: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => grad.zip_mut_with(pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(pre, |g, &z| {
                let t = z.tanh();
                *g *= 1.0 - t * t
            }),
        }
    }
}

/// Weight matrix `out x in` and bias `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { w: Array2::zeros((n_out, n_in)), b: Array1::zeros(n_out) }
    }

    fn slices(&self) -> [&[f64]; 2] {
        [self.w.as_slice().expect("standard layout"), self.b.as_slice().expect("standard layout")]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        let Dense { w, b } = self;
        [w.as_slice_mut().expect("standard layout"), b.as_slice_mut().expect("standard layout")]
    }
}

/// Parameters or gradients of an [`Mlp`]; identical layout either way.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers(pub Vec<Dense>);

impl Layers {
    pub fn zeros_like(other: &Layers) -> Self {
        Layers(other.0.iter().map(|l| Dense::zeros(l.w.ncols(), l.w.nrows())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_shape(&self, other: &Layers) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.w.dim() == b.w.dim() && a.b.dim() == b.b.dim())
    }

    /// Slices in canonical order: per layer, weights then biases.
    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.0.iter().flat_map(|l| l.slices())
    }

    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.0.iter_mut().flat_map(|l| l.slices_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().flat_map(|s| s.iter().copied()).collect()
    }

    pub fn get(&self, mut i: usize) -> f64 {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn get_mut(&mut self, mut i: usize) -> &mut f64 {
        for s in self.slices_mut() {
            if i < s.len() {
                return &mut s[i];
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn is_finite(&self) -> bool {
        self.slices().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Values retained by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    shape_tag: Vec<(usize, usize)>,
}

/// Multilayer perceptron; hidden layers use ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    params: Layers,
    output: Activation,
}

pub type Gradients = Layers;

impl Mlp {
    /// Fan-in scaled uniform weights `U(-1/sqrt(n_in), 1/sqrt(n_in))`, zero biases.
    pub fn init(sizes: &[usize], output: Activation, rng: &mut RngStream) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|p| {
                let (n_in, n_out) = (p[0], p[1]);
                let bound = 1.0 / (n_in as f64).sqrt();
                let w = Array2::from_shape_simple_fn((n_out, n_in), || rng.uniform(-bound, bound));
                let b = Array1::from_shape_simple_fn(n_out, || rng.uniform(-bound, bound));
                Dense { w, b }
            })
            .collect();
        Self { params: Layers(layers), output }
    }

    pub fn from_layers(layers: Vec<Dense>, output: Activation) -> Result<Self, NeuralError> {
        if layers.is_empty() {
            return Err(NeuralError::Shape { what: "layers", expected: "at least one".into(), found: "0".into() });
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b.len() != l.w.nrows() {
                return Err(NeuralError::Shape {
                    what: "bias",
                    expected: l.w.nrows().to_string(),
                    found: l.b.len().to_string(),
                });
            }
            if i > 0 && layers[i - 1].w.nrows() != l.w.ncols() {
                return Err(NeuralError::Shape {
                    what: "layer chain",
                    expected: layers[i - 1].w.nrows().to_string(),
                    found: l.w.ncols().to_string(),
                });
            }
        }
        let layers = layers
            .into_iter()
            .map(|l| Dense { w: l.w.as_standard_layout().into_owned(), b: l.b.as_standard_layout().into_owned() })
            .collect();
        Ok(Self { params: Layers(layers), output })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.params.0[0].w.ncols()];
        s.extend(self.params.0.iter().map(|l| l.w.nrows()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.params.0[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.params.0.last().unwrap().w.nrows()
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn params(&self) -> &Layers {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Layers {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NeuralError> {
        if x.ncols() != self.input_dim() {
            return Err(NeuralError::Shape {
                what: "input width",
                expected: self.input_dim().to_string(),
                found: x.ncols().to_string(),
            });
        }
        Ok(())
    }

    /// Batched forward pass; rows are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache), NeuralError> {
        self.check_input(&x)?;
        let n = self.params.0.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut h = x.to_owned();
        for (i, layer) in self.params.0.iter().enumerate() {
            let mut z = h.dot(&layer.w.t());
            z += &layer.b;
            inputs.push(h);
            pre.push(z.clone());
            let act = if i + 1 == n { self.output } else { Activation::Relu };
            act.apply(&mut z);
            h = z;
        }
        let shape_tag = self.params.0.iter().map(|l| l.w.dim()).collect();
        Ok((h, ForwardCache { inputs, pre, shape_tag }))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        self.check_input(&x)?;
        let n = self.params.0.len();
        let mut h = x.to_owned();
        for (i, layer) in self.params.0.iter().enumerate() {
            let mut z = h.dot(&layer.w.t());
            z += &layer.b;
            let act = if i + 1 == n { self.output } else { Activation::Relu };
            act.apply(&mut z);
            h = z;
        }
        Ok(h)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Gradients of a scalar loss given `dL/d(output)`; also returns `dL/d(input)`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>), NeuralError> {
        let shapes: Vec<(usize, usize)> = self.params.0.iter().map(|l| l.w.dim()).collect();
        if shapes != cache.shape_tag {
            return Err(NeuralError::Shape {
                what: "cache",
                expected: format!("{shapes:?}"),
                found: format!("{:?}", cache.shape_tag),
            });
        }
        let last = cache.pre.last().unwrap();
        if grad_output.dim() != last.dim() {
            return Err(NeuralError::Shape {
                what: "output gradient",
                expected: format!("{:?}", last.dim()),
                found: format!("{:?}", grad_output.dim()),
            });
        }
        let n = self.params.0.len();
        let mut grads = Vec::with_capacity(n);
        let mut g = grad_output.to_owned();
        for i in (0..n).rev() {
            let act = if i + 1 == n { self.output } else { Activation::Relu };
            act.backprop(&cache.pre[i], &mut g);
            let dw = g.t().dot(&cache.inputs[i]).as_standard_layout().into_owned();
            let db = g.sum_axis(Axis(0));
            let g_in = g.dot(&self.params.0[i].w);
            grads.push(Dense { w: dw, b: db });
            g = g_in;
        }
        grads.reverse();
        Ok((Layers(grads), g))
    }

    /// `self <- xi * source + (1 - xi) * self`, elementwise.
    pub fn soft_update_from(&mut self, source: &Mlp, xi: f64) {
        assert!(self.params.same_shape(&source.params), "soft update between differently shaped networks");
        for (dst, src) in self.params.slices_mut().zip(source.params.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = xi * s + (1.0 - xi) * *d;
            }
        }
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// One bias-corrected Adam update of `params` in place; `step` is the
/// 1-based index of this update.
pub fn adam_update(cfg: &AdamConfig, step: u64, params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64]) {
    let c1 = 1.0 - cfg.beta1.powi(step as i32);
    let c2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Layers,
    v: Layers,
    step: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self { config, m: Layers::zeros_like(&net.params), v: Layers::zeros_like(&net.params), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&Layers, &Layers) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), NeuralError> {
        if !grads.same_shape(&net.params) || !self.m.same_shape(&net.params) {
            return Err(NeuralError::Shape {
                what: "gradient layout",
                expected: format!("{:?}", net.sizes()),
                found: format!("{} layers", grads.0.len()),
            });
        }
        self.step += 1;
        let cfg = self.config;
        let step = self.step;
        for (((p, g), m), v) in net
            .params
            .slices_mut()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            adam_update(&cfg, step, p, g, m, v);
        }
        Ok(())
    }
}

/// Adam for a single scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarAdam {
    pub config: AdamConfig,
    pub m: f64,
    pub v: f64,
    pub step: u64,
}

impl ScalarAdam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, m: 0.0, v: 0.0, step: 0 }
    }

    pub fn step(&mut self, param: &mut f64, grad: f64) {
        self.step += 1;
        let mut p = [*param];
        let mut m = [self.m];
        let mut v = [self.v];
        adam_update(&self.config, self.step, &mut p, &[grad], &mut m, &mut v);
        *param = p[0];
        self.m = m[0];
        self.v = v[0];
    }
}

// Checkpoint format: little endian throughout.
//   magic "TAUDMLP\0", version u32, layer count u32, sizes (count+1) x u32,
//   hidden activation u8, output activation u8,
//   then per layer: weights (out x in, row-major) f64, biases f64.
const MLP_MAGIC: &[u8; 8] = b"TAUDMLP\0";
const ADAM_MAGIC: &[u8; 8] = b"TAUDADAM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON mirror of the binary header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub layer_count: u32,
    pub sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub num_params: usize,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> NeuralError + '_ {
    move |source| NeuralError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, msg: impl Into<String>) -> NeuralError {
    NeuralError::Format { path: path.display().to_string(), msg: msg.into() }
}

/// Sidecar path `<file>.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

impl Mlp {
    pub fn header(&self) -> CheckpointHeader {
        CheckpointHeader {
            format: "taud-mlp".into(),
            version: CHECKPOINT_VERSION,
            layer_count: self.params.0.len() as u32,
            sizes: self.sizes(),
            hidden_activation: Activation::Relu,
            output_activation: self.output,
            num_params: self.num_params(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.num_params());
        out.extend_from_slice(MLP_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.params.0.len() as u32).to_le_bytes());
        for s in self.sizes() {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.push(Activation::Relu.tag());
        out.push(self.output.tag());
        for s in self.params.slices() {
            for v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, NeuralError> {
        let mut r = ByteReader { bytes, pos: 0, path };
        if r.take(8)? != MLP_MAGIC {
            return Err(format_err(path, "not an MLP checkpoint"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(format_err(path, format!("unsupported version {version}")));
        }
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(format_err(path, "zero layers"));
        }
        let sizes = (0..=count).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        let hidden = r.take(1)?[0];
        if Activation::from_tag(hidden) != Some(Activation::Relu) {
            return Err(format_err(path, format!("unsupported hidden activation tag {hidden}")));
        }
        let out_tag = r.take(1)?[0];
        let output = Activation::from_tag(out_tag).ok_or_else(|| format_err(path, format!("bad activation tag {out_tag}")))?;
        let mut layers = Vec::with_capacity(count);
        for p in sizes.windows(2) {
            let (n_in, n_out) = (p[0], p[1]);
            let w = r.f64s(n_in * n_out)?;
            let b = r.f64s(n_out)?;
            layers.push(Dense {
                w: Array2::from_shape_vec((n_out, n_in), w).expect("sized"),
                b: Array1::from(b),
            });
        }
        if r.pos != bytes.len() {
            return Err(format_err(path, "trailing bytes"));
        }
        let net = Self::from_layers(layers, output)?;
        if !net.params.is_finite() {
            return Err(format_err(path, "non-finite parameter"));
        }
        Ok(net)
    }

    /// Writes the binary checkpoint and its JSON sidecar.
    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(io_err(path))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.header()).expect("serializable header");
        std::fs::write(&side, json).map_err(io_err(&side))
    }

    pub fn load(path: &Path) -> Result<Self, NeuralError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(io_err(path))?;
        Self::from_bytes(&bytes, path)
    }
}

impl AdamState {
    pub fn save(&self, path: &Path) -> Result<(), NeuralError> {
        let mut out = Vec::new();
        out.extend_from_slice(ADAM_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        for v in [self.config.lr, self.config.beta1, self.config.beta2, self.config.epsilon] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.m.len() as u64).to_le_bytes());
        for s in self.m.slices().chain(self.v.slices()) {
            for v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, out).map_err(io_err(path))
    }

    /// Loads moments saved for a network shaped like `net`.
    pub fn load(path: &Path, net: &Mlp) -> Result<Self, NeuralError> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let mut r = ByteReader { bytes: &bytes, pos: 0, path };
        if r.take(8)? != ADAM_MAGIC {
            return Err(format_err(path, "not an optimizer checkpoint"));
        }
        if r.u32()? != CHECKPOINT_VERSION {
            return Err(format_err(path, "unsupported version"));
        }
        let step = r.u64()?;
        let cfg = r.f64s(4)?;
        let config = AdamConfig { lr: cfg[0], beta1: cfg[1], beta2: cfg[2], epsilon: cfg[3] };
        let count = r.u64()? as usize;
        if count != net.num_params() {
            return Err(format_err(path, format!("{count} moments for a network of {} parameters", net.num_params())));
        }
        let mut state = AdamState::new(net, config);
        state.step = step;
        for s in state.m.slices_mut().chain(state.v.slices_mut()) {
            let vals = r.f64s(s.len())?;
            s.copy_from_slice(&vals);
        }
        Ok(state)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NeuralError> {
        if self.pos + n > self.bytes.len() {
            return Err(format_err(self.path, "truncated file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NeuralError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NeuralError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NeuralError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| format_err(self.path, "size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
