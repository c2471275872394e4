//! k independent QCNN chips between a classical pre-layer and an aggregation head.
//!
//! ```text
//! observation ─ pre-layer ─ π·tanh ─┬─ chip 1 (l angles) ─┐
//!                                   ├─ …                  ├─ head ─ Q-values
//!                                   └─ chip k (l angles) ─┘
//! ```
//!
//! Chips share one circuit layout but own separate parameters and never
//! exchange quantum information, so each chip's readout depends only on its
//! own slice of features and parameters.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{forward_unchecked, ChipInput, CircuitSpec, ParameterStore};
use crate::error::{contract, Result};
use crate::features::SparseFeatures;
use crate::grad::value_and_grad;
use crate::model::{QValues, SampleGrad};
use crate::nn::{build_head, Activation, DenseLayer, DenseNet};

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleModel {
    pub k: usize,
    pub l: usize,
    pub spec: CircuitSpec,
    /// `input_dim → k·l` with tanh; its output is scaled by π into embedding angles.
    pub pre_layer: DenseLayer,
    pub chips: Vec<ParameterStore>,
    /// Seed each chip's parameters were drawn from.
    pub chip_seeds: Vec<u64>,
    pub head: DenseNet,
}

/// Splits `k·l` features into `k` contiguous chip inputs.
pub fn partition(features: &[f64], k: usize, l: usize) -> Result<Vec<ChipInput>> {
    if k == 0 || l == 0 {
        return contract("partition needs k ≥ 1 and l ≥ 1");
    }
    if features.len() != k * l {
        return contract(format!(
            "cannot split {} features into {k} chips of {l}",
            features.len()
        ));
    }
    Ok(features.chunks_exact(l).map(|c| ChipInput(c.to_vec())).collect())
}

pub(crate) struct EnsembleTrace {
    /// tanh output of the pre-layer.
    pub squashed: Vec<f64>,
    pub chip_outputs: Vec<f64>,
    pub head: Vec<Vec<f64>>,
}

impl EnsembleModel {
    /// Random model: pre-layer and head from `seed`, each chip from its own derived seed.
    pub fn random(
        input_dim: usize,
        num_actions: usize,
        k: usize,
        l: usize,
        num_layers: usize,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 || input_dim == 0 || num_actions == 0 {
            return contract("ensemble dimensions must be positive");
        }
        let spec = CircuitSpec::qcnn(l, num_layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pre_layer = DenseLayer::random(input_dim, k * l, Activation::Tanh, &mut rng);
        let head = build_head(k, num_actions, &mut rng);
        let chip_seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
        let chips = chip_seeds
            .iter()
            .map(|&s| ParameterStore::random(spec.num_params(), &mut ChaCha8Rng::seed_from_u64(s)))
            .collect();
        Ok(Self {
            k,
            l,
            spec,
            pre_layer,
            chips,
            chip_seeds,
            head,
        })
    }

    /// Assembles a model from explicit parts, checking the `n = k·l` law.
    pub fn from_parts(
        spec: CircuitSpec,
        pre_layer: DenseLayer,
        chips: Vec<ParameterStore>,
        chip_seeds: Vec<u64>,
        head: DenseNet,
    ) -> Result<Self> {
        let k = chips.len();
        let l = spec.num_qubits();
        if k == 0 {
            return contract("an ensemble needs at least one chip");
        }
        if pre_layer.out_dim() != k * l {
            return contract(format!(
                "pre-layer emits {} features but {k} chips of {l} qubits need {}",
                pre_layer.out_dim(),
                k * l
            ));
        }
        if pre_layer.activation != Activation::Tanh {
            return contract("ensemble pre-layer must use tanh");
        }
        if head.in_dim() != k {
            return contract(format!("head takes {} inputs, expected {k}", head.in_dim()));
        }
        if chip_seeds.len() != k {
            return contract("one seed per chip required");
        }
        for c in &chips {
            spec.check_params(c)?;
        }
        Ok(Self {
            k,
            l,
            spec,
            pre_layer,
            chips,
            chip_seeds,
            head,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.pre_layer.in_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.head.out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.pre_layer.num_params() + self.k * self.spec.num_params() + self.head.num_params()
    }

    /// Embedding angles for every chip, concatenated.
    pub fn chip_angles(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        Ok(self.pre_layer.forward_sparse(x)?.into_iter().map(|y| PI * y).collect())
    }

    pub(crate) fn trace(&self, x: &SparseFeatures) -> Result<EnsembleTrace> {
        let squashed = self.pre_layer.forward_sparse(x)?;
        let angles: Vec<f64> = squashed.iter().map(|y| PI * y).collect();
        let chip_outputs: Vec<f64> = self
            .chips
            .par_iter()
            .zip(angles.par_chunks_exact(self.l))
            .map(|(p, a)| forward_unchecked(&self.spec, p, a))
            .collect();
        let head = self.head.trace(&chip_outputs)?;
        Ok(EnsembleTrace {
            squashed,
            chip_outputs,
            head,
        })
    }

    pub fn forward(&self, x: &SparseFeatures) -> Result<QValues> {
        Ok(QValues(self.trace(x)?.head.pop().expect("non-empty")))
    }

    /// Per-chip readouts `f_i(s_i)` before aggregation.
    pub fn chip_outputs(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.chip_outputs)
    }

    /// Gradient of `Σ_a dq[a]·Q(x, a)`, split as in [`SampleGrad`].
    pub(crate) fn sample_grad(&self, x: &SparseFeatures, dq: &[f64]) -> Result<SampleGrad> {
        if dq.len() != self.num_actions() {
            return contract("dq length must equal the action count");
        }
        let t = self.trace(x)?;
        let mut head_grads: Vec<Vec<f64>> = self.head.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        let d_chip = self.head.backward(&t.head, dq, &mut head_grads);
        let per_chip: Vec<Option<(Vec<f64>, Vec<f64>)>> = self
            .chips
            .par_iter()
            .zip(t.squashed.par_chunks_exact(self.l))
            .zip(d_chip.par_iter())
            .map(|((p, y), &df)| {
                if df == 0.0 {
                    return None;
                }
                let angles: Vec<f64> = y.iter().map(|v| PI * v).collect();
                let (_, g) = value_and_grad(&self.spec, p, &angles);
                Some((
                    g.d_params.iter().map(|d| df * d).collect(),
                    g.d_inputs.iter().map(|d| df * PI * d).collect(),
                ))
            })
            .collect();
        let mut d_squashed = vec![0.0; self.k * self.l];
        let mut rest = Vec::with_capacity(self.k + head_grads.len());
        for (i, c) in per_chip.into_iter().enumerate() {
            match c {
                Some((dp, dy)) => {
                    d_squashed[i * self.l..(i + 1) * self.l].copy_from_slice(&dy);
                    rest.push(dp);
                }
                None => rest.push(vec![0.0; self.spec.num_params()]),
            }
        }
        rest.extend(head_grads);
        Ok(SampleGrad {
            q_values: t.head.last().expect("non-empty").clone(),
            input_out: t.squashed,
            d_input_out: d_squashed,
            rest,
        })
    }

    /// `[pre.w, pre.b, chip₀, …, chip_{k-1}, head…]`.
    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.pre_layer.weights.as_slice(), self.pre_layer.bias.as_slice()];
        out.extend(self.chips.iter().map(|c| c.0.as_slice()));
        out.extend(self.head.param_blocks());
        out
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![
            self.pre_layer.weights.as_mut_slice(),
            self.pre_layer.bias.as_mut_slice(),
        ];
        out.extend(self.chips.iter_mut().map(|c| c.0.as_mut_slice()));
        out.extend(self.head.param_blocks_mut());
        out
    }
}

pub fn ensemble_forward(model: &EnsembleModel, observation: &[f64]) -> Result<QValues> {
    model.forward(&SparseFeatures::from_dense(observation))
}

/// Gradients of one backward pass, by component.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleGradients {
    pub pre_weights: Vec<f64>,
    pub pre_bias: Vec<f64>,
    pub chips: Vec<Vec<f64>>,
    pub head: Vec<Vec<f64>>,
}

impl EnsembleGradients {
    /// Same layout as [`EnsembleModel::param_blocks`].
    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        let mut out = vec![self.pre_weights, self.pre_bias];
        out.extend(self.chips);
        out.extend(self.head);
        out
    }
}

/// Chain-rule gradient of `Σ_a dLoss_dQ[a]·Q(observation, a)` for every weight.
pub fn ensemble_backward(model: &EnsembleModel, observation: &[f64], d_loss_d_q: &[f64]) -> Result<EnsembleGradients> {
    let x = SparseFeatures::from_dense(observation);
    let g = model.sample_grad(&x, d_loss_d_q)?;
    let mut pre_weights = vec![0.0; model.pre_layer.weights.len()];
    let mut pre_bias = vec![0.0; model.pre_layer.bias.len()];
    model
        .pre_layer
        .backward_sparse(&x, &g.input_out, &g.d_input_out, &mut pre_weights, &mut pre_bias);
    let mut rest = g.rest.into_iter();
    let chips = rest.by_ref().take(model.k).collect();
    Ok(EnsembleGradients {
        pre_weights,
        pre_bias,
        chips,
        head: rest.collect(),
    })
}
