//! Minimal dense networks: layers, backprop, Adam, and the classical baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::features::SparseFeatures;
use crate::model::SampleGrad;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => Activation::Linear,
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            _ => return contract(format!("unknown activation `{s}`")),
        })
    }
}

/// `activation(W·x + b)` with `W` stored row-major as `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return contract("dense layer dimensions must be positive");
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return contract(format!(
                "dense layer {in_dim}→{out_dim} given {} weights and {} biases",
                weights.len(),
                bias.len()
            ));
        }
        if weights.iter().chain(&bias).any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite layer weight".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    /// Weights and biases uniform in `[-1/√in, 1/√in]`.
    pub fn random(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() };
        let weights = draw(in_dim * out_dim);
        let bias = draw(out_dim);
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        }
    }

    pub fn identity(dim: usize, activation: Activation) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self {
            in_dim: dim,
            out_dim: dim,
            weights,
            bias: vec![0.0; dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return contract(format!("layer expects {} inputs, got {}", self.in_dim, x.len()));
        }
        Ok(self
            .weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| self.activation.apply(dot(row, x) + b))
            .collect())
    }

    pub fn forward_sparse(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        if x.dim() != self.in_dim {
            return contract(format!("layer expects {} inputs, got {}", self.in_dim, x.dim()));
        }
        Ok(self
            .weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| {
                let z: f64 = x.iter().map(|(i, v)| row[i] * v).sum::<f64>() + b;
                self.activation.apply(z)
            })
            .collect())
    }

    /// Accumulates `∂/∂W, ∂/∂b` of `Σ dy·y` into `dw`, `db` and returns `∂/∂x`.
    pub fn backward(&self, x: &[f64], y: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            let dz = dy[o] * self.activation.derivative(y[o]);
            if dz == 0.0 {
                continue;
            }
            db[o] += dz;
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut dw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += dz * x[i];
                dx[i] += dz * row[i];
            }
        }
        dx
    }

    /// Like [`backward`](Self::backward) for a sparse input, without the input gradient.
    pub fn backward_sparse(&self, x: &SparseFeatures, y: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) {
        for o in 0..self.out_dim {
            let dz = dy[o] * self.activation.derivative(y[o]);
            if dz == 0.0 {
                continue;
            }
            db[o] += dz;
            let grow = &mut dw[o * self.in_dim..(o + 1) * self.in_dim];
            for (i, v) in x.iter() {
                grow[i] += dz * v;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dense_forward(layer: &DenseLayer, input: &[f64]) -> Result<Vec<f64>> {
    layer.forward(input)
}

/// A stack of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return contract("a network needs at least one layer");
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return contract(format!(
                    "layer widths do not chain: {} then {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Random stack with widths `widths[0] → widths[1] → …`, one activation per layer.
    pub fn random(widths: &[usize], activations: &[Activation], rng: &mut impl Rng) -> Self {
        assert_eq!(widths.len(), activations.len() + 1);
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| DenseLayer::random(w[0], w[1], a, rng))
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    /// Input followed by every layer's output.
    pub fn trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut acts = vec![x.to_vec()];
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"))?;
            acts.push(next);
        }
        Ok(acts)
    }

    /// Backprop through a [`trace`](Self::trace); `grads` holds `[w₀, b₀, w₁, b₁, …]`.
    pub fn backward(&self, acts: &[Vec<f64>], dy: &[f64], grads: &mut [Vec<f64>]) -> Vec<f64> {
        let mut d = dy.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (w, b) = grads[2 * i..2 * i + 2].split_at_mut(1);
            d = layer.backward(&acts[i], &acts[i + 1], &d, &mut w[0], &mut b[0]);
        }
        d
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// Aggregation head: `k → max(k, 8)` ReLU, then linear to the action count.
pub fn build_head(k: usize, num_actions: usize, rng: &mut impl Rng) -> DenseNet {
    let hidden = k.max(8);
    DenseNet::random(&[k, hidden, num_actions], &[Activation::Relu, Activation::Linear], rng)
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(block_sizes: impl IntoIterator<Item = usize>) -> Self {
        let first_moment: Vec<Vec<f64>> = block_sizes.into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            second_moment: first_moment.clone(),
            first_moment,
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients are rejected before
/// anything is modified.
pub fn adam_step(weights: &mut [&mut [f64]], grads: &[Vec<f64>], state: &mut AdamState, lr: f64) -> Result<()> {
    if weights.len() != grads.len() || weights.len() != state.first_moment.len() {
        return contract("Adam: weight, gradient and moment block counts differ");
    }
    for ((w, g), m) in weights.iter().zip(grads).zip(&state.first_moment) {
        if w.len() != g.len() || w.len() != m.len() {
            return contract("Adam: block shapes differ");
        }
    }
    if grads.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    state.step_count += 1;
    let t = state.step_count as f64;
    let c1 = 1.0 - ADAM_BETA1.powf(t);
    let c2 = 1.0 - ADAM_BETA2.powf(t);
    for (((w, g), m), v) in weights
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for i in 0..w.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            w[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
    Ok(())
}

/// Classical stand-in for the QCNN ensemble.
///
/// Each of the `k` pseudo-chips halves its width once per layer
/// (`l → l/2 → … → l/2^L`) with tanh activations, then collapses to one
/// bounded scalar, mirroring a chip's conv/pool hierarchy and its readout.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBaseline {
    pub k: usize,
    pub l: usize,
    pub num_layers: usize,
    pub pre_layer: DenseLayer,
    pub stacks: Vec<DenseNet>,
    pub head: DenseNet,
}

pub fn pseudo_chip_widths(l: usize, num_layers: usize) -> Result<Vec<usize>> {
    if num_layers == 0 || num_layers >= usize::BITS as usize || l < (1 << num_layers) {
        return contract(format!("{l} features cannot be halved {num_layers} time(s)"));
    }
    let mut widths: Vec<usize> = (0..=num_layers).map(|i| l >> i).collect();
    widths.push(1);
    Ok(widths)
}

pub fn build_classical_baseline(
    input_dim: usize,
    num_actions: usize,
    k: usize,
    l: usize,
    num_layers: usize,
    rng: &mut impl Rng,
) -> Result<ClassicalBaseline> {
    if k == 0 || input_dim == 0 || num_actions == 0 {
        return contract("baseline dimensions must be positive");
    }
    let widths = pseudo_chip_widths(l, num_layers)?;
    let acts = vec![Activation::Tanh; widths.len() - 1];
    let pre_layer = DenseLayer::random(input_dim, k * l, Activation::Tanh, rng);
    let stacks = (0..k).map(|_| DenseNet::random(&widths, &acts, rng)).collect();
    let head = build_head(k, num_actions, rng);
    Ok(ClassicalBaseline {
        k,
        l,
        num_layers,
        pre_layer,
        stacks,
        head,
    })
}

pub(crate) struct BaselineTrace {
    pub features: Vec<f64>,
    pub stacks: Vec<Vec<Vec<f64>>>,
    pub head: Vec<Vec<f64>>,
}

impl ClassicalBaseline {
    pub fn input_dim(&self) -> usize {
        self.pre_layer.in_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.head.out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.pre_layer.num_params()
            + self.stacks.iter().map(DenseNet::num_params).sum::<usize>()
            + self.head.num_params()
    }

    pub(crate) fn trace(&self, x: &SparseFeatures) -> Result<BaselineTrace> {
        let features = self.pre_layer.forward_sparse(x)?;
        let stacks = self
            .stacks
            .iter()
            .zip(features.chunks_exact(self.l))
            .map(|(s, slice)| s.trace(slice))
            .collect::<Result<Vec<_>>>()?;
        let scalars: Vec<f64> = stacks.iter().map(|t| t.last().expect("non-empty")[0]).collect();
        let head = self.head.trace(&scalars)?;
        Ok(BaselineTrace { features, stacks, head })
    }

    pub fn forward(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.head.pop().expect("non-empty"))
    }

    /// Gradient of `Σ dq·Q(x)`; the pre-layer part is left as an output-side delta.
    pub(crate) fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        if dq.len() != self.num_actions() {
            return contract("dq length must equal the action count");
        }
        let t = self.trace(x)?;
        let mut rest: Vec<Vec<f64>> = self.param_blocks()[2..].iter().map(|b| vec![0.0; b.len()]).collect();
        let stack_blocks = 2 * self.stacks[0].layers.len();
        let (stack_grads, head_grads) = rest.split_at_mut(stack_blocks * self.k);
        let d_scalars = self.head.backward(&t.head, dq, head_grads);
        let mut d_features = vec![0.0; self.k * self.l];
        for (i, stack) in self.stacks.iter().enumerate() {
            if d_scalars[i] == 0.0 {
                continue;
            }
            let g = &mut stack_grads[i * stack_blocks..(i + 1) * stack_blocks];
            let d = stack.backward(&t.stacks[i], &[d_scalars[i]], g);
            d_features[i * self.l..(i + 1) * self.l].copy_from_slice(&d);
        }
        Ok(SampleGrad {
            q_values: t.head.last().expect("non-empty").clone(),
            input_out: t.features,
            d_input_out: d_features,
            rest,
        })
    }

    /// `[pre.w, pre.b, stack₀…, stack_{k-1}…, head…]`.
    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.pre_layer.weights.as_slice(), self.pre_layer.bias.as_slice()];
        for s in &self.stacks {
            out.extend(s.param_blocks());
        }
        out.extend(self.head.param_blocks());
        out
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![
            self.pre_layer.weights.as_mut_slice(),
            self.pre_layer.bias.as_mut_slice(),
        ];
        for s in &mut self.stacks {
            out.extend(s.param_blocks_mut());
        }
        out.extend(self.head.param_blocks_mut());
        out
    }
}
