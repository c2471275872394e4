//! Mixed-state oracle for checking pooling semantics.
//!
//! Gates are embedded into full `2^n × 2^n` unitaries and applied as
//! `ρ → U ρ U†` by dense multiplication, a route that shares nothing with the
//! in-place amplitude updates of [`crate::statevector`] except the 2×2 / 4×4
//! gate matrices themselves. Production code never uses this module.

use num_complex::Complex64;

use crate::error::{contract, Error, Result};
use crate::statevector::{qubit_mask, z_string_mask, Gate, StateVector, Unitary};

pub const MAX_QUBITS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    /// Row-major `dim × dim`.
    matrix: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = state.num_qubits();
        if n > MAX_QUBITS {
            return contract(format!("density oracle limited to {MAX_QUBITS} qubits, got {n}"));
        }
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut matrix = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                matrix.push(a * b.conj());
            }
        }
        Ok(Self {
            num_qubits: n,
            dim,
            matrix,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue, via Jacobi rotations on the real symmetric
    /// embedding `[[Re, -Im], [Im, Re]]` (which doubles every eigenvalue's multiplicity).
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim;
        let n = 2 * d;
        let mut a = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                let z = self.get(i, j);
                a[i * n + j] = z.re;
                a[(i + d) * n + (j + d)] = z.re;
                a[i * n + (j + d)] = -z.im;
                a[(i + d) * n + j] = z.im;
            }
        }
        jacobi_eigenvalues(&mut a, n).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `ρ → U ρ U†` with `U` the gate embedded in the full register.
    pub fn apply(&mut self, gate: &Gate, params: &[f64]) -> Result<()> {
        gate.validate(self.num_qubits, params)?;
        let u = embed_unitary(self.num_qubits, gate, params);
        let ur = matmul(&u, &self.matrix, self.dim);
        let u_dag = dagger(&u, self.dim);
        self.matrix = matmul(&ur, &u_dag, self.dim);
        Ok(())
    }

    /// Traces out `discard`, keeping the remaining qubits in ascending order.
    pub fn partial_trace(&self, discard: &[usize]) -> Result<DensityMatrix> {
        let n = self.num_qubits;
        for (i, &q) in discard.iter().enumerate() {
            if q >= n {
                return Err(Error::Index(format!("qubit {q} out of range for {n} qubit(s)")));
            }
            if discard[..i].contains(&q) {
                return Err(Error::Index(format!("repeated qubit {q}")));
            }
        }
        if discard.len() >= n {
            return contract("cannot trace out every qubit");
        }
        let kept: Vec<usize> = (0..n).filter(|q| !discard.contains(q)).collect();
        let mut gone: Vec<usize> = discard.to_vec();
        gone.sort_unstable();
        let kept_dim = 1 << kept.len();
        let gone_dim = 1 << gone.len();
        let compose = |k: usize, g: usize| -> usize {
            let mut idx = 0;
            for (pos, &q) in kept.iter().enumerate() {
                if k & (1 << (kept.len() - 1 - pos)) != 0 {
                    idx |= qubit_mask(n, q);
                }
            }
            for (pos, &q) in gone.iter().enumerate() {
                if g & (1 << (gone.len() - 1 - pos)) != 0 {
                    idx |= qubit_mask(n, q);
                }
            }
            idx
        };
        let mut matrix = vec![Complex64::new(0.0, 0.0); kept_dim * kept_dim];
        for a in 0..kept_dim {
            for b in 0..kept_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..gone_dim {
                    acc += self.get(compose(a, e), compose(b, e));
                }
                matrix[a * kept_dim + b] = acc;
            }
        }
        Ok(DensityMatrix {
            num_qubits: kept.len(),
            dim: kept_dim,
            matrix,
        })
    }

    /// `Tr[Z_{q1} ⊗ … ⊗ Z_{qm} ρ]`.
    pub fn expectation_z(&self, qubits: &[usize]) -> Result<f64> {
        let mask = z_string_mask(self.num_qubits, qubits)?;
        Ok((0..self.dim)
            .map(|i| {
                let p = self.get(i, i).re;
                if (i & mask).count_ones() % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }
}

pub fn partial_trace(dm: &DensityMatrix, discard: &[usize]) -> Result<DensityMatrix> {
    dm.partial_trace(discard)
}

/// The gate as a dense `2^n × 2^n` matrix.
pub fn embed_unitary(n: usize, gate: &Gate, params: &[f64]) -> Vec<Complex64> {
    let dim = 1 << n;
    let (local, k): (Vec<Complex64>, usize) = match gate.unitary(params) {
        Unitary::Single(m) => (m.iter().flatten().copied().collect(), 2),
        Unitary::Pair(m) => (m.iter().flatten().copied().collect(), 4),
    };
    let target_mask: usize = gate.targets.iter().map(|&q| qubit_mask(n, q)).sum();
    let local_index = |i: usize| -> usize {
        gate.targets
            .iter()
            .fold(0, |acc, &q| (acc << 1) | usize::from(i & qubit_mask(n, q) != 0))
    };
    let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            if i & !target_mask == j & !target_mask {
                u[i * dim + j] = local[local_index(i) * k + local_index(j)];
            }
        }
    }
    u
}

pub(crate) fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

fn dagger(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j].conj();
        }
    }
    out
}

fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
