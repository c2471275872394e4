//! One chip's QCNN: angle embedding, conv/pool layers, a final unitary and a Z-string readout.
//!
//! Each conv layer acts on the currently kept qubits: a U3 on every qubit,
//! then IsingXX, IsingYY and IsingZZ on each adjacent pair in ring order
//! (the closing pair is added only when more than two qubits remain).
//! Pooling keeps the even positions of the kept list. After the last layer
//! one U3 per remaining qubit precedes the measurement of `Z ⊗ … ⊗ Z` over
//! those qubits.
//!
//! Discarded qubits are never touched again, so the readout on the full pure
//! state equals the readout on the partially traced state; pooling is
//! therefore bookkeeping only.

use std::fmt::Write as _;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{contract, Error, Result};
use crate::statevector::{z_string_mask, Gate, GateKind, Prepared, StateVector, MAX_QUBITS};

pub const FORMAT_HEADER: &str = "qcnn-circuit v1";

/// A group of consecutive gates acting on one set of active qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    /// `Some(layer)` for a conv layer (1-based), `None` for the final unitary.
    pub layer: Option<usize>,
    pub active: Vec<usize>,
    pub gates: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitSpec {
    num_qubits: usize,
    num_layers: usize,
    gates: Vec<Gate>,
    stages: Vec<Stage>,
    measurement: Vec<usize>,
    num_params: usize,
}

/// Trainable angles of one chip, in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore(pub Vec<f64>);

/// Embedding angles fed to one chip.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipInput(pub Vec<f64>);

impl ParameterStore {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Uniform in `[-π, π]`.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self(
            (0..n)
                .map(|_| rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl ChipInput {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn build_qcnn(num_qubits: usize, num_layers: usize) -> Result<CircuitSpec> {
    CircuitSpec::qcnn(num_qubits, num_layers)
}

impl CircuitSpec {
    pub fn qcnn(num_qubits: usize, num_layers: usize) -> Result<Self> {
        if num_layers == 0 {
            return contract("a QCNN needs at least one layer");
        }
        if num_layers >= usize::BITS as usize || num_qubits < (1usize << num_layers) {
            return contract(format!(
                "{num_qubits} qubit(s) cannot be pooled through {num_layers} layer(s)"
            ));
        }
        if !num_qubits.is_power_of_two() || num_qubits > MAX_QUBITS {
            return contract(format!(
                "qubit count {num_qubits} must be a power of two ≤ {MAX_QUBITS}"
            ));
        }
        let mut gates = Vec::new();
        let mut stages = Vec::new();
        let mut slot = 0;
        let mut push = |gates: &mut Vec<Gate>, kind: GateKind, targets: Vec<usize>| {
            let slots = (slot..slot + kind.arity()).collect();
            slot += kind.arity();
            gates.push(Gate::new(kind, targets, slots));
        };
        let mut active: Vec<usize> = (0..num_qubits).collect();
        for layer in 1..=num_layers {
            let start = gates.len();
            for &q in &active {
                push(&mut gates, GateKind::U3, vec![q]);
            }
            for (a, b) in ring_pairs(&active) {
                for kind in [GateKind::IsingXX, GateKind::IsingYY, GateKind::IsingZZ] {
                    push(&mut gates, kind, vec![a, b]);
                }
            }
            stages.push(Stage {
                layer: Some(layer),
                active: active.clone(),
                gates: start..gates.len(),
            });
            active = active.iter().copied().step_by(2).collect();
        }
        let start = gates.len();
        for &q in &active {
            push(&mut gates, GateKind::U3, vec![q]);
        }
        stages.push(Stage {
            layer: None,
            active: active.clone(),
            gates: start..gates.len(),
        });
        let spec = Self {
            num_qubits,
            num_layers,
            gates,
            stages,
            measurement: active,
            num_params: slot,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn measurement(&self) -> &[usize] {
        &self.measurement
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Active qubit set entering each conv layer, followed by the set measured at the end.
    pub fn kept_qubits_per_layer(&self) -> Vec<Vec<usize>> {
        let mut kept: Vec<Vec<usize>> = self
            .stages
            .iter()
            .filter(|s| s.layer.is_some())
            .map(|s| s.active.clone())
            .collect();
        kept.push(self.measurement.clone());
        kept
    }

    /// Structural invariants: nested kept sets, gates confined to their
    /// stage's qubits, slots covering `0..num_params` exactly once.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.num_params];
        let mut prev: Option<&[usize]> = None;
        let mut covered = 0;
        for stage in &self.stages {
            if stage.gates.start != covered || stage.gates.end > self.gates.len() {
                return contract("stages must partition the gate list in order");
            }
            covered = stage.gates.end;
            if let Some(p) = prev {
                if !stage.active.iter().all(|q| p.contains(q)) {
                    return contract("kept qubit sets must be nested");
                }
            }
            prev = Some(&stage.active);
            for gate in &self.gates[stage.gates.clone()] {
                if gate.targets.len() != gate.kind.num_targets() || gate.param_slots.len() != gate.kind.arity() {
                    return contract(format!("malformed {} gate", gate.kind));
                }
                if gate.targets.iter().any(|q| !stage.active.contains(q)) {
                    return contract("gate touches a qubit outside its stage");
                }
                for &s in &gate.param_slots {
                    if s >= self.num_params || seen[s] {
                        return contract(format!("parameter slot {s} invalid or reused"));
                    }
                    seen[s] = true;
                }
            }
        }
        if covered != self.gates.len() {
            return contract("gates outside every stage");
        }
        if !seen.iter().all(|&s| s) {
            return contract("unused parameter slots");
        }
        let last = prev.ok_or_else(|| Error::Contract("circuit has no stages".into()))?;
        if self.measurement.is_empty() || !self.measurement.iter().all(|q| last.contains(q)) {
            return contract("measurement must act on the final kept qubits");
        }
        z_string_mask(self.num_qubits, &self.measurement)?;
        Ok(())
    }

    pub fn check_params(&self, params: &ParameterStore) -> Result<()> {
        if params.len() != self.num_params {
            return contract(format!(
                "expected {} circuit parameters, got {}",
                self.num_params,
                params.len()
            ));
        }
        if params.0.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite circuit parameter".into()));
        }
        Ok(())
    }

    pub fn check_input(&self, input: &ChipInput) -> Result<()> {
        if input.len() != self.num_qubits {
            return contract(format!(
                "expected {} embedding angles, got {}",
                self.num_qubits,
                input.len()
            ));
        }
        if input.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite embedding angle".into()));
        }
        Ok(())
    }

    /// Values of `gate`'s parameters gathered from the store.
    pub fn gate_params(&self, gate: &Gate, params: &ParameterStore) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, &s) in out.iter_mut().zip(&gate.param_slots) {
            *o = params.0[s];
        }
        out
    }

    /// Runs gates `from..` on `state`.
    pub(crate) fn run_from(&self, state: &mut StateVector, from: usize, params: &ParameterStore) {
        for gate in &self.gates[from..] {
            let p = self.gate_params(gate, params);
            state.apply_unchecked(gate, &p[..gate.kind.arity()]);
        }
    }

    /// Every gate's matrix for one parameter vector.
    pub(crate) fn prepare(&self, params: &ParameterStore) -> Vec<Prepared> {
        self.gates
            .iter()
            .map(|g| Prepared::new(self.num_qubits, g, &self.gate_params(g, params)[..g.kind.arity()]))
            .collect()
    }

    pub(crate) fn readout(&self, state: &StateVector) -> f64 {
        let mask = z_string_mask(self.num_qubits, &self.measurement).expect("measurement validated at construction");
        state.expectation_z_mask(mask)
    }

    /// Same circuit with qubit `q` renamed to `perm[q]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_qubits;
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return contract("relabelling must be a permutation of the register");
        }
        let map = |qs: &[usize]| qs.iter().map(|&q| perm[q]).collect::<Vec<_>>();
        Ok(Self {
            num_qubits: n,
            num_layers: self.num_layers,
            gates: self
                .gates
                .iter()
                .map(|g| Gate::new(g.kind, map(&g.targets), g.param_slots.clone()))
                .collect(),
            stages: self
                .stages
                .iter()
                .map(|s| Stage {
                    layer: s.layer,
                    active: map(&s.active),
                    gates: s.gates.clone(),
                })
                .collect(),
            measurement: map(&self.measurement),
            num_params: self.num_params,
        })
    }

    pub fn to_text(&self) -> String {
        let join = |qs: &[usize]| qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "qubits {}", self.num_qubits).unwrap();
        writeln!(out, "layers {}", self.num_layers).unwrap();
        writeln!(out, "params {}", self.num_params).unwrap();
        for stage in &self.stages {
            match stage.layer {
                Some(l) => writeln!(out, "layer {l} kept {}", join(&stage.active)).unwrap(),
                None => writeln!(out, "final kept {}", join(&stage.active)).unwrap(),
            }
            for g in &self.gates[stage.gates.clone()] {
                writeln!(
                    out,
                    "gate {} targets {} slots {}",
                    g.kind,
                    join(&g.targets),
                    join(&g.param_slots)
                )
                .unwrap();
            }
        }
        writeln!(out, "measure {}", join(&self.measurement)).unwrap();
        out
    }
}

impl FromStr for CircuitSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let perr = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let nums = |line: usize, toks: &[&str]| -> Result<Vec<usize>> {
            toks.iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| perr(line, &format!("bad integer `{t}`")))
                })
                .collect()
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == FORMAT_HEADER => {}
            _ => return Err(perr(1, "missing `qcnn-circuit v1` header")),
        }
        let mut header = |key: &str| -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "truncated header"))?;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| perr(ln, &format!("expected `{key}`")))?;
            rest.parse().map_err(|_| perr(ln, "bad integer"))
        };
        let num_qubits = header("qubits")?;
        let num_layers = header("layers")?;
        let num_params = header("params")?;
        let mut gates = Vec::new();
        let mut stages: Vec<Stage> = Vec::new();
        let mut measurement = None;
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "layer" | "final" => {
                    let (layer, rest) = if toks[0] == "layer" {
                        let l = toks.get(1).and_then(|t| t.parse().ok());
                        (Some(l.ok_or_else(|| perr(ln, "bad layer index"))?), &toks[2..])
                    } else {
                        (None, &toks[1..])
                    };
                    if rest.first() != Some(&"kept") {
                        return Err(perr(ln, "expected `kept`"));
                    }
                    if let Some(s) = stages.last_mut() {
                        s.gates.end = gates.len();
                    }
                    stages.push(Stage {
                        layer,
                        active: nums(ln, &rest[1..])?,
                        gates: gates.len()..gates.len(),
                    });
                }
                "gate" => {
                    if stages.is_empty() {
                        return Err(perr(ln, "gate before any stage"));
                    }
                    let kind: GateKind = toks
                        .get(1)
                        .ok_or_else(|| perr(ln, "missing gate kind"))?
                        .parse()
                        .map_err(|_| perr(ln, "unknown gate kind"))?;
                    let t = toks.iter().position(|&t| t == "targets");
                    let s = toks.iter().position(|&t| t == "slots");
                    let (Some(t), Some(s)) = (t, s) else {
                        return Err(perr(ln, "expected `targets … slots …`"));
                    };
                    if t != 2 || s < t {
                        return Err(perr(ln, "expected `targets … slots …`"));
                    }
                    gates.push(Gate::new(kind, nums(ln, &toks[t + 1..s])?, nums(ln, &toks[s + 1..])?));
                }
                "measure" => measurement = Some(nums(ln, &toks[1..])?),
                other => return Err(perr(ln, &format!("unknown directive `{other}`"))),
            }
        }
        if let Some(s) = stages.last_mut() {
            s.gates.end = gates.len();
        }
        let spec = CircuitSpec {
            num_qubits,
            num_layers,
            gates,
            stages,
            measurement: measurement.ok_or_else(|| perr(0, "missing `measure` line"))?,
            num_params,
        };
        if spec.num_qubits == 0 || spec.num_qubits > MAX_QUBITS {
            return contract("qubit count out of range");
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn ring_pairs(active: &[usize]) -> Vec<(usize, usize)> {
    let m = active.len();
    let mut pairs: Vec<(usize, usize)> = active.windows(2).map(|w| (w[0], w[1])).collect();
    if m > 2 {
        pairs.push((active[m - 1], active[0]));
    }
    pairs
}

/// `⊗_j RY(x_j)|0⟩`, built directly as a product state.
pub fn embed(input: &ChipInput) -> Result<StateVector> {
    let n = input.len();
    if n == 0 || n > MAX_QUBITS {
        return contract(format!("embedding needs 1..={MAX_QUBITS} angles, got {n}"));
    }
    if input.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite embedding angle".into()));
    }
    Ok(embed_unchecked(&input.0))
}

pub(crate) fn embed_unchecked(angles: &[f64]) -> StateVector {
    let n = angles.len();
    let halves: Vec<(f64, f64)> = angles.iter().map(|x| ((x / 2.0).cos(), (x / 2.0).sin())).collect();
    let amps = (0..1usize << n)
        .map(|i| {
            let mut a = 1.0;
            for (q, &(c, s)) in halves.iter().enumerate() {
                a *= if i & (1 << (n - 1 - q)) != 0 { s } else { c };
            }
            Complex64::new(a, 0.0)
        })
        .collect();
    StateVector::from_amplitudes(amps).expect("product of unit vectors")
}

/// Chip readout `⟨Z-string⟩ ∈ [-1, 1]` for the given parameters and input.
pub fn forward(spec: &CircuitSpec, params: &ParameterStore, input: &ChipInput) -> Result<f64> {
    spec.check_params(params)?;
    spec.check_input(input)?;
    Ok(forward_unchecked(spec, params, &input.0))
}

pub(crate) fn forward_unchecked(spec: &CircuitSpec, params: &ParameterStore, angles: &[f64]) -> f64 {
    let mut state = embed_unchecked(angles);
    spec.run_from(&mut state, 0, params);
    spec.readout(&state)
}

/// Readout with the gate matrices already evaluated.
pub(crate) fn forward_prepared(spec: &CircuitSpec, gates: &[Prepared], angles: &[f64]) -> f64 {
    let mut state = embed_unchecked(angles);
    for g in gates {
        state.apply_prepared(g);
    }
    spec.readout(&state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn qcnn_8_2_structure() {
        let spec = build_qcnn(8, 2).unwrap();
        assert_eq!(
            spec.kept_qubits_per_layer(),
            vec![(0..8).collect::<Vec<_>>(), vec![0, 2, 4, 6], vec![0, 4]]
        );
        // enumerate slots per stage: 8 U3 + 8 ring pairs × 3, 4 U3 + 4 pairs × 3, 2 U3
        let per_stage: Vec<usize> = spec
            .stages()
            .iter()
            .map(|s| spec.gates()[s.gates.clone()].iter().map(|g| g.kind.arity()).sum())
            .collect();
        assert_eq!(per_stage, vec![48, 24, 6]);
        assert_eq!(spec.num_params(), 78);
        assert_eq!(spec.measurement(), &[0, 4]);
    }

    #[test]
    fn smallest_instance() {
        let spec = build_qcnn(2, 1).unwrap();
        assert_eq!(spec.kept_qubits_per_layer(), vec![vec![0, 1], vec![0]]);
        // 2 U3 + a single XX/YY/ZZ pair without wrap-around + final U3
        assert_eq!(spec.num_params(), 6 + 3 + 3);
        assert_eq!(spec.measurement(), &[0]);
    }

    #[test]
    fn too_many_layers() {
        assert!(matches!(build_qcnn(4, 3), Err(Error::Contract(_))));
        assert!(build_qcnn(6, 1).is_err());
        assert!(build_qcnn(4, 0).is_err());
    }

    #[test]
    fn embedding() {
        let s = embed(&ChipInput(vec![0.0; 3])).unwrap();
        for q in 0..3 {
            assert_eq!(s.expectation_z(&[q]).unwrap(), 1.0);
        }
        let s = embed(&ChipInput(vec![PI, 0.0, 0.0])).unwrap();
        assert!((s.expectation_z(&[0]).unwrap() + 1.0).abs() < 1e-12);
        for theta in [-2.5, 0.4, 1.3] {
            let s = embed(&ChipInput(vec![theta])).unwrap();
            assert!((s.expectation_z(&[0]).unwrap() - theta.cos()).abs() < 1e-12);
        }
        assert!(embed(&ChipInput(vec![])).is_err());
    }

    #[test]
    fn forward_trivial_cases() {
        let spec = build_qcnn(8, 2).unwrap();
        let out = forward(&spec, &ParameterStore::zeros(78), &ChipInput(vec![0.0; 8])).unwrap();
        assert!((out - 1.0).abs() < 1e-12);

        let spec = build_qcnn(2, 1).unwrap();
        let out = forward(&spec, &ParameterStore::zeros(12), &ChipInput(vec![PI, 0.0])).unwrap();
        assert!((out + 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_bad_sizes() {
        let spec = build_qcnn(4, 1).unwrap();
        let p = ParameterStore::zeros(spec.num_params());
        assert!(forward(&spec, &ParameterStore::zeros(3), &ChipInput(vec![0.0; 4])).is_err());
        assert!(forward(&spec, &p, &ChipInput(vec![0.0; 3])).is_err());
    }

    #[test]
    fn relabelling_leaves_forward_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = build_qcnn(4, 2).unwrap();
        let params = ParameterStore::random(spec.num_params(), &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
        let perm = [2, 0, 3, 1];
        let moved = spec.relabel(&perm).unwrap();
        moved.validate().unwrap();
        let mut y = vec![0.0; 4];
        for q in 0..4 {
            y[perm[q]] = x[q];
        }
        let a = forward(&spec, &params, &ChipInput(x)).unwrap();
        let b = forward(&moved, &params, &ChipInput(y)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn text_format_round_trip() {
        for (l, layers) in [(2, 1), (4, 2), (8, 2), (8, 3)] {
            let spec = build_qcnn(l, layers).unwrap();
            let text = spec.to_text();
            assert!(text.starts_with("qcnn-circuit v1\n"));
            assert_eq!(text.parse::<CircuitSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!("nope".parse::<CircuitSpec>().is_err());
        let text = build_qcnn(2, 1).unwrap().to_text().replace("IsingYY", "CNOT");
        assert!(matches!(text.parse::<CircuitSpec>(), Err(Error::Parse { .. })));
        // a gate escaping its stage's qubits
        let text = build_qcnn(4, 2)
            .unwrap()
            .to_text()
            .replace("final kept 0\ngate U3 targets 0", "final kept 0\ngate U3 targets 1");
        assert!(text.parse::<CircuitSpec>().is_err());
    }
}
