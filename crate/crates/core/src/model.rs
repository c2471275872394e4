//! The Q-function interface shared by every agent kind.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::EnsembleModel;
use crate::error::Result;
use crate::features::SparseFeatures;
use crate::nn::{build_classical_baseline, Activation, ClassicalBaseline, DenseLayer};

#[derive(Clone, Debug, PartialEq)]
pub struct QValues(pub Vec<f64>);

impl QValues {
    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &q) in self.0.iter().enumerate() {
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((i, q));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn max(&self) -> Option<f64> {
        self.argmax().map(|i| self.0[i])
    }
}

/// One sample's gradient, with the (large, sparse-input) first layer left as
/// an output-side delta so it can be folded into a shared buffer.
pub struct SampleGrad {
    /// `Q(x, ·)` from the same forward pass.
    pub q_values: Vec<f64>,
    /// Output of the first layer.
    pub input_out: Vec<f64>,
    /// Upstream gradient with respect to that output.
    pub d_input_out: Vec<f64>,
    /// Gradients of every block after the first layer's weights and bias.
    pub rest: Vec<Vec<f64>>,
}

/// A differentiable action-value function whose first layer reads sparse features.
///
/// Parameter blocks are ordered `[input.w, input.b, rest…]`.
pub trait QFunction: Clone + Send + Sync {
    fn input_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn q_values(&self, x: &SparseFeatures) -> Result<QValues>;
    fn input_layer(&self) -> &DenseLayer;
    /// Gradient of `Σ_a dq[a]·Q(x, a)`.
    fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad>;
    fn param_blocks(&self) -> Vec<&[f64]>;
    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect()
    }

    /// Adds `scale` times one sample's gradient into `grads`.
    fn fold_sample(&self, x: &SparseFeatures, part: &SampleGrad, scale: f64, grads: &mut [Vec<f64>]) {
        if scale == 0.0 {
            return;
        }
        let (head, tail) = grads.split_at_mut(2);
        let (w, b) = head.split_at_mut(1);
        let dy: Vec<f64> = part.d_input_out.iter().map(|d| scale * d).collect();
        self.input_layer()
            .backward_sparse(x, &part.input_out, &dy, &mut w[0], &mut b[0]);
        for (acc, g) in tail.iter_mut().zip(&part.rest) {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += scale * v;
            }
        }
    }

    /// Sums sample gradients into `grads`. Samples are evaluated in parallel
    /// and folded in input order, so the result does not depend on scheduling.
    fn accumulate_batch(&self, batch: &[(&SparseFeatures, Vec<f64>)], grads: &mut [Vec<f64>]) -> Result<()> {
        let parts: Vec<SampleGrad> = batch
            .par_iter()
            .map(|(x, dq)| self.sample_grad(x, dq))
            .collect::<Result<_>>()?;
        for ((x, _), part) in batch.iter().zip(&parts) {
            self.fold_sample(x, part, 1.0, grads);
        }
        Ok(())
    }
}

impl QFunction for EnsembleModel {
    fn input_dim(&self) -> usize {
        EnsembleModel::input_dim(self)
    }

    fn num_actions(&self) -> usize {
        EnsembleModel::num_actions(self)
    }

    fn q_values(&self, x: &SparseFeatures) -> Result<QValues> {
        self.forward(x)
    }

    fn input_layer(&self) -> &DenseLayer {
        &self.pre_layer
    }

    fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        EnsembleModel::sample_grad(self, x, dq)
    }

    fn param_blocks(&self) -> Vec<&[f64]> {
        EnsembleModel::param_blocks(self)
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        EnsembleModel::param_blocks_mut(self)
    }
}

impl QFunction for ClassicalBaseline {
    fn input_dim(&self) -> usize {
        ClassicalBaseline::input_dim(self)
    }

    fn num_actions(&self) -> usize {
        ClassicalBaseline::num_actions(self)
    }

    fn q_values(&self, x: &SparseFeatures) -> Result<QValues> {
        self.forward(x).map(QValues)
    }

    fn input_layer(&self) -> &DenseLayer {
        &self.pre_layer
    }

    fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        ClassicalBaseline::sample_grad(self, x, dq)
    }

    fn param_blocks(&self) -> Vec<&[f64]> {
        ClassicalBaseline::param_blocks(self)
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        ClassicalBaseline::param_blocks_mut(self)
    }
}

/// Lookup-table Q-function over one-hot state encodings.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularQ {
    pub table: DenseLayer,
}

impl TabularQ {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            table: DenseLayer::new(
                num_states,
                num_actions,
                vec![0.0; num_states * num_actions],
                vec![0.0; num_actions],
                Activation::Linear,
            )
            .expect("positive dimensions"),
        }
    }

    /// `Q(s, a)` for a state index.
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.table.weights[action * self.table.in_dim() + state] + self.table.bias[action]
    }
}

impl QFunction for TabularQ {
    fn input_dim(&self) -> usize {
        self.table.in_dim()
    }

    fn num_actions(&self) -> usize {
        self.table.out_dim()
    }

    fn q_values(&self, x: &SparseFeatures) -> Result<QValues> {
        self.table.forward_sparse(x).map(QValues)
    }

    fn input_layer(&self) -> &DenseLayer {
        &self.table
    }

    fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        let q = self.table.forward_sparse(x)?;
        Ok(SampleGrad {
            q_values: q.clone(),
            input_out: q,
            d_input_out: dq.to_vec(),
            rest: Vec::new(),
        })
    }

    fn param_blocks(&self) -> Vec<&[f64]> {
        vec![&self.table.weights, &self.table.bias]
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.table.weights, &mut self.table.bias]
    }
}

/// The three agent architectures compared by the harness.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentModel {
    Classical(ClassicalBaseline),
    Quantum(EnsembleModel),
}

impl AgentModel {
    pub fn classical(
        input_dim: usize,
        num_actions: usize,
        k: usize,
        l: usize,
        num_layers: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_classical_baseline(input_dim, num_actions, k, l, num_layers, &mut rng).map(AgentModel::Classical)
    }

    pub fn quantum(
        input_dim: usize,
        num_actions: usize,
        k: usize,
        l: usize,
        num_layers: usize,
        seed: u64,
    ) -> Result<Self> {
        EnsembleModel::random(input_dim, num_actions, k, l, num_layers, seed).map(AgentModel::Quantum)
    }

    pub fn num_params(&self) -> usize {
        match self {
            AgentModel::Classical(m) => m.num_params(),
            AgentModel::Quantum(m) => m.num_params(),
        }
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AgentModel::Classical($m) => $e,
            AgentModel::Quantum($m) => $e,
        }
    };
}

impl QFunction for AgentModel {
    fn input_dim(&self) -> usize {
        delegate!(self, m => QFunction::input_dim(m))
    }

    fn num_actions(&self) -> usize {
        delegate!(self, m => QFunction::num_actions(m))
    }

    fn q_values(&self, x: &SparseFeatures) -> Result<QValues> {
        delegate!(self, m => m.q_values(x))
    }

    fn input_layer(&self) -> &DenseLayer {
        delegate!(self, m => m.input_layer())
    }

    fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        delegate!(self, m => QFunction::sample_grad(m, x, dq))
    }

    fn param_blocks(&self) -> Vec<&[f64]> {
        delegate!(self, m => QFunction::param_blocks(m))
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        delegate!(self, m => QFunction::param_blocks_mut(m))
    }
}
