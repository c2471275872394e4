//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations: the response curve of one chip as an embedding angle is
//! swept (with its parameter-shift slope), platformer frames for a typed
//! action script, and the Q-values of a freshly initialised ensemble on the
//! frame stack that script produces.

use qensemble::circuit::{build_qcnn, forward, ChipInput, ParameterStore};
use qensemble::env::{Action, Observation, Platformer, WorldSpec, FRAME_SIZE};
use qensemble::features::Featurize;
use qensemble::grad::grad_parameter_shift;
use qensemble::model::{AgentModel, QFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Sweeps embedding angle `qubit` over `[-π, π]` with the other angles at 0.
/// Returns `[x, f(x), df/dx]` triples, flattened.
#[wasm_bindgen]
pub fn chip_curve(qubits: usize, layers: usize, seed: u64, qubit: usize, points: usize) -> Result<Vec<f64>, String> {
    let spec = build_qcnn(qubits, layers).map_err(err)?;
    if qubit >= qubits || points < 2 {
        return Err(format!("need qubit < {qubits} and at least 2 points"));
    }
    let params = ParameterStore::random(spec.num_params(), &mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (points - 1) as f64;
        let mut angles = vec![0.0; qubits];
        angles[qubit] = x;
        let input = ChipInput(angles);
        let f = forward(&spec, &params, &input).map_err(err)?;
        let g = grad_parameter_shift(&spec, &params, &input).map_err(err)?;
        out.extend([x, f, g.d_inputs[qubit]]);
    }
    Ok(out)
}

fn parse_script(script: &str) -> Result<Vec<Action>, String> {
    script
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'w' | 'W' => Ok(Action::WalkRight),
            'j' | 'J' => Ok(Action::JumpRight),
            other => Err(format!("unknown action `{other}`; use w (walk) or j (jump)")),
        })
        .collect()
}

struct Played {
    frames: Vec<u8>,
    last: Observation,
    reward: f64,
    x: usize,
    done: bool,
}

fn play(script: &str) -> Result<Played, String> {
    let mut env = Platformer::new(WorldSpec::default_world());
    let mut last = env.reset(0);
    let mut frames = last.frames()[3].levels().to_vec();
    let (mut reward, mut done) = (0.0, false);
    for a in parse_script(script)? {
        if done {
            break;
        }
        let r = env.step(a).map_err(err)?;
        frames.extend_from_slice(r.observation.frames()[3].levels());
        reward += r.reward;
        done = r.done;
        last = r.observation;
    }
    Ok(Played {
        frames,
        last,
        reward,
        x: env.position().0,
        done,
    })
}

/// Shade levels (0..=4) of every frame the script visits, reset frame first,
/// each `FRAME_SIZE × FRAME_SIZE` row-major. Steps after the episode ends are
/// ignored.
#[wasm_bindgen]
pub fn render_script(script: &str) -> Result<Vec<u8>, String> {
    Ok(play(script)?.frames)
}

/// `[total reward, x position, done]` after the script.
#[wasm_bindgen]
pub fn script_outcome(script: &str) -> Result<Vec<f64>, String> {
    let p = play(script)?;
    Ok(vec![p.reward, p.x as f64, if p.done { 1.0 } else { 0.0 }])
}

#[wasm_bindgen]
pub fn frame_size() -> usize {
    FRAME_SIZE
}

/// Q-values (walk, jump) of an untrained `chips × qubits` ensemble on the
/// observation reached by the script.
#[wasm_bindgen]
pub fn ensemble_q_values(
    chips: usize,
    qubits: usize,
    layers: usize,
    seed: u64,
    script: &str,
) -> Result<Vec<f64>, String> {
    let obs = play(script)?.last;
    let x = obs.features();
    let model = AgentModel::quantum(x.dim(), Action::COUNT, chips, qubits, layers, seed).map_err(err)?;
    Ok(model.q_values(&x).map_err(err)?.0)
}
