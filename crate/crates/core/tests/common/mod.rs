//! Reference implementations used only as test oracles. They share no code
//! with the simulator: gate matrices come from Pauli exponentials, pooling is
//! an explicit partial trace of a density matrix, and dense layers are plain loops.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use qensemble::circuit::{CircuitSpec, ParameterStore};
use qensemble::ensemble::EnsembleModel;
use qensemble::nn::{Activation, DenseLayer, DenseNet};
use qensemble::statevector::GateKind;

/// Square complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct Mat {
    pub n: usize,
    pub d: Vec<C>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            d: vec![C::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.d[i * n + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let n = rows.len();
        Self {
            n,
            d: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> C {
        self.d[r * self.n + c]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.at(r, k);
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.d[r * n + c] += a * o.at(k, c);
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.d[c * n + r] = self.at(r, c).conj();
            }
        }
        out
    }

    pub fn kron(&self, o: &Mat) -> Mat {
        let n = self.n * o.n;
        let mut out = Mat::zeros(n);
        for (r1, c1) in (0..self.n).flat_map(|r| (0..self.n).map(move |c| (r, c))) {
            for (r2, c2) in (0..o.n).flat_map(|r| (0..o.n).map(move |c| (r, c))) {
                out.d[(r1 * o.n + r2) * n + c1 * o.n + c2] = self.at(r1, c1) * o.at(r2, c2);
            }
        }
        out
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat {
            n: self.n,
            d: self.d.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat {
            n: self.n,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs_diff(&self, o: &Mat) -> f64 {
        self.d.iter().zip(&o.d).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }
}

pub fn pauli(p: char) -> Mat {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match p {
        'I' => Mat::identity(2),
        'X' => Mat::from_rows(&[&[z, o], &[o, z]]),
        'Y' => Mat::from_rows(&[&[z, -i], &[i, z]]),
        'Z' => Mat::from_rows(&[&[o, z], &[z, -o]]),
        _ => unreachable!(),
    }
}

/// `exp(-iθG/2)` for an involutory generator `G`.
pub fn rotation(g: &Mat, theta: f64) -> Mat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Mat::identity(g.n).scale(C::new(c, 0.0)).add(&g.scale(C::new(0.0, -s)))
}

/// Oracle matrix of a gate on its own targets (first target most significant).
/// U3 is built as `RZ(φ)·RY(θ)·RZ(λ)` times the phase `e^{i(φ+λ)/2}`.
pub fn gate_matrix(kind: GateKind, p: &[f64]) -> Mat {
    match kind {
        GateKind::RY => rotation(&pauli('Y'), p[0]),
        GateKind::U3 => {
            let m = rotation(&pauli('Z'), p[1])
                .mul(&rotation(&pauli('Y'), p[0]))
                .mul(&rotation(&pauli('Z'), p[2]));
            m.scale(C::from_polar(1.0, (p[1] + p[2]) / 2.0))
        }
        GateKind::IsingXX => rotation(&pauli('X').kron(&pauli('X')), p[0]),
        GateKind::IsingYY => rotation(&pauli('Y').kron(&pauli('Y')), p[0]),
        GateKind::IsingZZ => rotation(&pauli('Z').kron(&pauli('Z')), p[0]),
    }
}

/// Lifts `op` acting on register positions `pos` into the full `m`-qubit space
/// (position 0 is the most significant bit).
pub fn lift(op: &Mat, pos: &[usize], m: usize) -> Mat {
    let dim = 1 << m;
    let bit = |idx: usize, p: usize| (idx >> (m - 1 - p)) & 1;
    let sub = |idx: usize| pos.iter().fold(0, |acc, &p| (acc << 1) | bit(idx, p));
    let rest_mask: usize = (0..m).filter(|p| !pos.contains(p)).map(|p| 1 << (m - 1 - p)).sum();
    let mut out = Mat::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & rest_mask == c & rest_mask {
                out.d[r * dim + c] = op.at(sub(r), sub(c));
            }
        }
    }
    out
}

/// Traces out every register position not in `keep` (ascending).
pub fn partial_trace(rho: &Mat, m: usize, keep: &[usize]) -> Mat {
    let k = keep.len();
    let traced: Vec<usize> = (0..m).filter(|p| !keep.contains(p)).collect();
    let compose = |kept_bits: usize, traced_bits: usize| {
        let mut idx = 0;
        for (j, &p) in keep.iter().enumerate() {
            idx |= ((kept_bits >> (k - 1 - j)) & 1) << (m - 1 - p);
        }
        for (j, &p) in traced.iter().enumerate() {
            idx |= ((traced_bits >> (traced.len() - 1 - j)) & 1) << (m - 1 - p);
        }
        idx
    };
    let mut out = Mat::zeros(1 << k);
    for r in 0..1 << k {
        for c in 0..1 << k {
            let mut acc = C::new(0.0, 0.0);
            for t in 0..1 << traced.len() {
                acc += rho.at(compose(r, t), compose(c, t));
            }
            out.d[r * (1 << k) + c] = acc;
        }
    }
    out
}

/// QCNN readout by explicit density-matrix evolution: each conv layer acts on
/// the current register, then every odd register position is traced out
/// before the next layer.
pub fn qcnn_density_oracle(spec: &CircuitSpec, params: &ParameterStore, angles: &[f64]) -> f64 {
    let zero = Mat::from_rows(&[
        &[C::new(1.0, 0.0), C::new(0.0, 0.0)],
        &[C::new(0.0, 0.0), C::new(0.0, 0.0)],
    ]);
    let mut rho = Mat::identity(1);
    for &x in angles {
        let u = rotation(&pauli('Y'), x);
        rho = rho.kron(&u.mul(&zero).mul(&u.dagger()));
    }
    let mut register: Vec<usize> = (0..spec.num_qubits()).collect();
    for stage in spec.stages() {
        assert_eq!(stage.active, register, "stage acts on the surviving qubits");
        let m = register.len();
        for gate in &spec.gates()[stage.gates.clone()] {
            let p: Vec<f64> = gate.param_slots.iter().map(|&s| params.0[s]).collect();
            let pos: Vec<usize> = gate
                .targets
                .iter()
                .map(|t| register.iter().position(|r| r == t).unwrap())
                .collect();
            let u = lift(&gate_matrix(gate.kind, &p), &pos, m);
            rho = u.mul(&rho).mul(&u.dagger());
        }
        if stage.layer.is_some() {
            let keep: Vec<usize> = (0..m).step_by(2).collect();
            rho = partial_trace(&rho, m, &keep);
            register = keep.iter().map(|&p| register[p]).collect();
        }
    }
    let m = register.len();
    let mut z = Mat::identity(1);
    for q in &register {
        z = z.kron(&if spec.measurement().contains(q) {
            pauli('Z')
        } else {
            pauli('I')
        });
    }
    assert_eq!(z.n, 1 << m);
    rho.mul(&z).trace().re
}

pub fn dense_layer_oracle(layer: &DenseLayer, x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    (0..layer.bias.len())
        .map(|o| {
            let mut z = layer.bias[o];
            for i in 0..n_in {
                z += layer.weights[o * n_in + i] * x[i];
            }
            match layer.activation {
                Activation::Linear => z,
                Activation::Relu => z.max(0.0),
                Activation::Tanh => z.tanh(),
            }
        })
        .collect()
}

pub fn dense_net_oracle(net: &DenseNet, x: &[f64]) -> Vec<f64> {
    net.layers.iter().fold(x.to_vec(), |h, l| dense_layer_oracle(l, &h))
}

/// Q-values of an ensemble via dense loops and the density-matrix chip oracle.
pub fn ensemble_oracle(model: &EnsembleModel, x: &[f64]) -> Vec<f64> {
    let angles: Vec<f64> = dense_layer_oracle(&model.pre_layer, x)
        .iter()
        .map(|v| std::f64::consts::PI * v)
        .collect();
    let outs: Vec<f64> = model
        .chips
        .iter()
        .zip(angles.chunks(model.l))
        .map(|(p, a)| qcnn_density_oracle(&model.spec, p, a))
        .collect();
    dense_net_oracle(&model.head, &outs)
}

/// Central finite difference of `f` with respect to every entry of every
/// parameter block, perturbing a clone of `model`.
pub fn finite_difference_blocks<M: Clone>(
    model: &M,
    blocks: impl Fn(&mut M) -> Vec<&mut [f64]>,
    f: impl Fn(&M) -> f64,
    h: f64,
) -> Vec<Vec<f64>> {
    let mut work = model.clone();
    let shapes: Vec<usize> = blocks(&mut work).iter().map(|b| b.len()).collect();
    let mut out = Vec::new();
    for (b, &len) in shapes.iter().enumerate() {
        let mut g = vec![0.0; len];
        for (i, gi) in g.iter_mut().enumerate() {
            let orig = blocks(&mut work)[b][i];
            blocks(&mut work)[b][i] = orig + h;
            let plus = f(&work);
            blocks(&mut work)[b][i] = orig - h;
            let minus = f(&work);
            blocks(&mut work)[b][i] = orig;
            *gi = (plus - minus) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// A tiny platformer run: 2 chips of 2 qubits, short episodes, early updates.
pub fn smoke_config(out: &std::path::Path) -> qensemble::harness::ExperimentConfig {
    let mut c = qensemble::harness::ExperimentConfig::default();
    c.chips = 2;
    c.qubits = 2;
    c.layers = 1;
    c.max_steps = 25;
    c.out_dir = out.to_path_buf();
    c.train.max_episodes = 6;
    c.train.batch_size = 8;
    c.train.burn_in = 16;
    c.train.replay_capacity = 500;
    c.train.target_sync_every = 20;
    c.train.epsilon_decay = 0.99;
    c.train.learning_rate = 0.001;
    c.train.seed = 11;
    c
}
