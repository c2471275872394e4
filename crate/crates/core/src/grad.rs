//! Exact parameter-shift gradients of a chip readout.
//!
//! Every gate in the set is `exp(-i θ G / 2)` with `G` having eigenvalues
//! ±1 (U3 factors as RZ·RY·RZ), so `∂f/∂θ = [f(θ + π/2) − f(θ − π/2)] / 2`
//! holds exactly for each circuit parameter and each RY embedding angle.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{embed_unchecked, forward_prepared, forward_unchecked, ChipInput, CircuitSpec, ParameterStore};
use crate::error::{contract, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientRecord {
    pub d_params: Vec<f64>,
    pub d_inputs: Vec<f64>,
}

impl GradientRecord {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d_params: self.d_params.iter().map(|g| g * c).collect(),
            d_inputs: self.d_inputs.iter().map(|g| g * c).collect(),
        }
    }
}

pub fn grad_parameter_shift(spec: &CircuitSpec, params: &ParameterStore, input: &ChipInput) -> Result<GradientRecord> {
    spec.check_params(params)?;
    spec.check_input(input)?;
    Ok(value_and_grad(spec, params, &input.0).1)
}

/// Readout plus its parameter-shift gradient.
///
/// The state just before each gate is computed once and shared by both
/// shifted evaluations of that gate's parameters, which changes the work but
/// not the arithmetic of the two-term rule.
pub(crate) fn value_and_grad(spec: &CircuitSpec, params: &ParameterStore, angles: &[f64]) -> (f64, GradientRecord) {
    let prepared = spec.prepare(params);
    let mut d_inputs = Vec::with_capacity(angles.len());
    let mut shifted = angles.to_vec();
    for j in 0..angles.len() {
        shifted[j] = angles[j] + FRAC_PI_2;
        let plus = forward_prepared(spec, &prepared, &shifted);
        shifted[j] = angles[j] - FRAC_PI_2;
        let minus = forward_prepared(spec, &prepared, &shifted);
        shifted[j] = angles[j];
        d_inputs.push((plus - minus) / 2.0);
    }

    let mut d_params = vec![0.0; spec.num_params()];
    let mut prefix = embed_unchecked(angles);
    for (g, gate) in spec.gates().iter().enumerate() {
        let arity = gate.kind.arity();
        let base = spec.gate_params(gate, params);
        for (k, &slot) in gate.param_slots.iter().enumerate() {
            let eval = |delta: f64| {
                let mut p = base;
                p[k] += delta;
                let mut state = prefix.clone();
                state.apply_unchecked(gate, &p[..arity]);
                for later in &prepared[g + 1..] {
                    state.apply_prepared(later);
                }
                spec.readout(&state)
            };
            d_params[slot] = (eval(FRAC_PI_2) - eval(-FRAC_PI_2)) / 2.0;
        }
        prefix.apply_prepared(&prepared[g]);
    }
    let value = spec.readout(&prefix);
    (value, GradientRecord { d_params, d_inputs })
}

/// Central differences with step `h`; a test oracle only.
pub fn grad_finite_difference(
    spec: &CircuitSpec,
    params: &ParameterStore,
    input: &ChipInput,
    h: f64,
) -> Result<GradientRecord> {
    if !(h > 0.0 && h.is_finite()) {
        return contract(format!("finite-difference step must be positive, got {h}"));
    }
    spec.check_params(params)?;
    spec.check_input(input)?;
    let mut p = params.clone();
    let d_params = (0..params.len())
        .map(|i| {
            p.0[i] = params.0[i] + h;
            let plus = forward_unchecked(spec, &p, &input.0);
            p.0[i] = params.0[i] - h;
            let minus = forward_unchecked(spec, &p, &input.0);
            p.0[i] = params.0[i];
            (plus - minus) / (2.0 * h)
        })
        .collect();
    let mut x = input.0.clone();
    let d_inputs = (0..x.len())
        .map(|j| {
            x[j] = input.0[j] + h;
            let plus = forward_unchecked(spec, params, &x);
            x[j] = input.0[j] - h;
            let minus = forward_unchecked(spec, params, &x);
            x[j] = input.0[j];
            (plus - minus) / (2.0 * h)
        })
        .collect();
    Ok(GradientRecord { d_params, d_inputs })
}
