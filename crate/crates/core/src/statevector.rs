//! Dense pure-state simulation for small registers.
//!
//! Qubit 0 is the most significant bit of the amplitude index. Every
//! rotation uses the `exp(-i θ G / 2)` convention, so each scalar parameter
//! enters through a generator with eigenvalues ±1/2.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{contract, Error, Result};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    U3,
    RY,
    IsingXX,
    IsingYY,
    IsingZZ,
}

impl GateKind {
    /// Number of scalar parameters the gate consumes.
    pub fn arity(self) -> usize {
        match self {
            GateKind::U3 => 3,
            _ => 1,
        }
    }

    pub fn num_targets(self) -> usize {
        match self {
            GateKind::U3 | GateKind::RY => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::U3 => "U3",
            GateKind::RY => "RY",
            GateKind::IsingXX => "IsingXX",
            GateKind::IsingYY => "IsingYY",
            GateKind::IsingZZ => "IsingZZ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "U3" => GateKind::U3,
            "RY" => GateKind::RY,
            "IsingXX" => GateKind::IsingXX,
            "IsingYY" => GateKind::IsingYY,
            "IsingZZ" => GateKind::IsingZZ,
            other => return contract(format!("unknown gate kind `{other}`")),
        })
    }
}

/// A gate placed on specific qubits, reading its angles from a parameter store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub param_slots: Vec<usize>,
}

/// Matrix of a gate in the computational basis of its targets, first target most significant.
#[derive(Clone, Copy, Debug)]
pub enum Unitary {
    Single([[Complex64; 2]; 2]),
    Pair([[Complex64; 4]; 4]),
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, param_slots: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            param_slots,
        }
    }

    /// Checks targets against a register of `num_qubits` and the parameter count.
    pub fn validate(&self, num_qubits: usize, params: &[f64]) -> Result<()> {
        if self.targets.len() != self.kind.num_targets() {
            return contract(format!(
                "{} takes {} target(s), got {}",
                self.kind,
                self.kind.num_targets(),
                self.targets.len()
            ));
        }
        for (i, &t) in self.targets.iter().enumerate() {
            if t >= num_qubits {
                return Err(Error::Index(format!(
                    "target {t} out of range for {num_qubits} qubit(s)"
                )));
            }
            if self.targets[..i].contains(&t) {
                return Err(Error::Index(format!("repeated target {t}")));
            }
        }
        if params.len() != self.kind.arity() {
            return contract(format!(
                "{} takes {} parameter(s), got {}",
                self.kind,
                self.kind.arity(),
                params.len()
            ));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gate parameter {p}")));
        }
        Ok(())
    }

    pub fn unitary(&self, params: &[f64]) -> Unitary {
        gate_unitary(self.kind, params)
    }
}

/// Parameters that undo `kind(params)`.
pub fn inverse_params(kind: GateKind, params: &[f64]) -> Vec<f64> {
    match kind {
        // U3(θ,φ,λ)† = U3(-θ,-λ,-φ)
        GateKind::U3 => vec![-params[0], -params[2], -params[1]],
        _ => params.iter().map(|p| -p).collect(),
    }
}

pub fn gate_unitary(kind: GateKind, params: &[f64]) -> Unitary {
    let half = params[0] / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let i = Complex64::i();
    match kind {
        GateKind::RY => Unitary::Single([[ONE * c, ONE * -s], [ONE * s, ONE * c]]),
        GateKind::U3 => {
            let (phi, lam) = (params[1], params[2]);
            Unitary::Single([
                [ONE * c, -Complex64::from_polar(s, lam)],
                [Complex64::from_polar(s, phi), Complex64::from_polar(c, phi + lam)],
            ])
        }
        GateKind::IsingXX => {
            let d = ONE * c;
            let o = -i * s;
            Unitary::Pair([
                [d, ZERO, ZERO, o],
                [ZERO, d, o, ZERO],
                [ZERO, o, d, ZERO],
                [o, ZERO, ZERO, d],
            ])
        }
        GateKind::IsingYY => {
            let d = ONE * c;
            let p = i * s;
            let m = -i * s;
            Unitary::Pair([
                [d, ZERO, ZERO, p],
                [ZERO, d, m, ZERO],
                [ZERO, m, d, ZERO],
                [p, ZERO, ZERO, d],
            ])
        }
        GateKind::IsingZZ => {
            let a = Complex64::from_polar(1.0, -half);
            let b = Complex64::from_polar(1.0, half);
            Unitary::Pair([
                [a, ZERO, ZERO, ZERO],
                [ZERO, b, ZERO, ZERO],
                [ZERO, ZERO, b, ZERO],
                [ZERO, ZERO, ZERO, a],
            ])
        }
    }
}

/// Bit mask selecting qubit `q` of an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// A gate with its matrix evaluated and its index masks resolved, so it can
/// be applied repeatedly without recomputing trigonometry.
#[derive(Clone, Debug)]
pub(crate) enum Prepared {
    Single {
        mask: usize,
        m: [[Complex64; 2]; 2],
    },
    /// Two-qubit matrices whose only nonzeros lie on the diagonal and
    /// anti-diagonal, which covers every Ising rotation.
    DiagAnti {
        m0: usize,
        m1: usize,
        diag: [Complex64; 4],
        anti: [Complex64; 4],
    },
    Pair {
        m0: usize,
        m1: usize,
        m: [[Complex64; 4]; 4],
    },
}

impl Prepared {
    pub(crate) fn new(num_qubits: usize, gate: &Gate, params: &[f64]) -> Self {
        match gate.unitary(params) {
            Unitary::Single(m) => Prepared::Single {
                mask: qubit_mask(num_qubits, gate.targets[0]),
                m,
            },
            Unitary::Pair(m) => {
                let (m0, m1) = (
                    qubit_mask(num_qubits, gate.targets[0]),
                    qubit_mask(num_qubits, gate.targets[1]),
                );
                let sparse = (0..4).all(|r| (0..4).all(|c| c == r || c == 3 - r || m[r][c] == ZERO));
                if sparse {
                    Prepared::DiagAnti {
                        m0,
                        m1,
                        diag: std::array::from_fn(|r| m[r][r]),
                        anti: std::array::from_fn(|r| m[r][3 - r]),
                    }
                } else {
                    Prepared::Pair { m0, m1, m }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_register_size(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self { num_qubits, amplitudes })
    }

    /// Builds a state from raw amplitudes, which must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return contract(format!("amplitude count {len} is not a power of two ≥ 2"));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_register_size(num_qubits)?;
        let state = Self { num_qubits, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` in place with its own parameter values (not the whole store).
    pub fn apply(&mut self, gate: &Gate, params: &[f64]) -> Result<()> {
        gate.validate(self.num_qubits, params)?;
        self.apply_unchecked(gate, params);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate, params: &[f64]) {
        self.apply_prepared(&Prepared::new(self.num_qubits, gate, params));
    }

    pub(crate) fn apply_prepared(&mut self, gate: &Prepared) {
        let amps = &mut self.amplitudes;
        match gate {
            Prepared::Single { mask, m } => {
                for i in 0..amps.len() {
                    if i & mask != 0 {
                        continue;
                    }
                    let j = i | mask;
                    let (a0, a1) = (amps[i], amps[j]);
                    amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    amps[j] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
            Prepared::DiagAnti { m0, m1, diag, anti } => {
                for i in 0..amps.len() {
                    if i & (m0 | m1) != 0 {
                        continue;
                    }
                    let idx = [i, i | m1, i | m0, i | m0 | m1];
                    let a = idx.map(|k| amps[k]);
                    for r in 0..4 {
                        amps[idx[r]] = diag[r] * a[r] + anti[r] * a[3 - r];
                    }
                }
            }
            Prepared::Pair { m0, m1, m } => {
                for i in 0..amps.len() {
                    if i & (m0 | m1) != 0 {
                        continue;
                    }
                    let idx = [i, i | m1, i | m0, i | m0 | m1];
                    let a = idx.map(|k| amps[k]);
                    for (r, &k) in idx.iter().enumerate() {
                        amps[k] = m[r][0] * a[0] + m[r][1] * a[1] + m[r][2] * a[2] + m[r][3] * a[3];
                    }
                }
            }
        }
    }

    /// `⟨ψ| Z_{q1} ⊗ … ⊗ Z_{qm} |ψ⟩`.
    pub fn expectation_z(&self, qubits: &[usize]) -> Result<f64> {
        let mask = z_string_mask(self.num_qubits, qubits)?;
        Ok(self.expectation_z_mask(mask))
    }

    pub(crate) fn expectation_z_mask(&self, mask: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if (i & mask).count_ones().is_multiple_of(2) {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }
}

/// Functional form of [`StateVector::apply`].
pub fn apply_gate(state: &StateVector, gate: &Gate, params: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate, params)?;
    Ok(out)
}

pub fn expectation_z(state: &StateVector, qubits: &[usize]) -> Result<f64> {
    state.expectation_z(qubits)
}

pub(crate) fn z_string_mask(num_qubits: usize, qubits: &[usize]) -> Result<usize> {
    if qubits.is_empty() {
        return contract("Z-string needs at least one qubit");
    }
    let mut mask = 0;
    for &q in qubits {
        if q >= num_qubits {
            return Err(Error::Index(format!(
                "qubit {q} out of range for {num_qubits} qubit(s)"
            )));
        }
        let bit = qubit_mask(num_qubits, q);
        if mask & bit != 0 {
            return Err(Error::Index(format!("repeated qubit {q}")));
        }
        mask |= bit;
    }
    Ok(mask)
}

fn check_register_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return contract(format!("register size {n} outside 1..={MAX_QUBITS}"));
    }
    Ok(())
}
