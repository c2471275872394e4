//! Tiny deterministic MDPs with exactly solvable action values.
//!
//! * `chain3`: states 0‥2 in a line, actions {left, right}. Moving right
//!   from state 2 pays 1 and ends the episode; every other move pays 0.
//! * `grid4`: a 2×2 grid (0 1 / 2 3) with a wall between 0 and 2, actions
//!   {up, right, down, left}. Entering cell 3 pays 1 and ends the episode;
//!   bumping into walls or edges leaves the agent in place.

use rand::Rng;

use crate::error::{contract, Error, Result};
use crate::features::SparseFeatures;

/// Outcome of taking an action in a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub reward: f64,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    pub name: String,
    pub num_states: usize,
    pub num_actions: usize,
    /// `table[s][a]`.
    pub table: Vec<Vec<Outcome>>,
    /// States that are never acted in (episodes end on entering them).
    pub terminal: Vec<bool>,
}

pub fn make_tabular_mdp(name: &str) -> Result<TabularMdp> {
    match name {
        "chain3" => Ok(chain3()),
        "grid4" => Ok(grid4()),
        other => Err(Error::Config(format!("unknown tabular MDP `{other}`"))),
    }
}

fn chain3() -> TabularMdp {
    let step = |next, reward, done| Outcome { next, reward, done };
    TabularMdp {
        name: "chain3".into(),
        num_states: 3,
        num_actions: 2,
        table: vec![
            vec![step(0, 0.0, false), step(1, 0.0, false)],
            vec![step(0, 0.0, false), step(2, 0.0, false)],
            vec![step(1, 0.0, false), step(2, 1.0, true)],
        ],
        terminal: vec![false; 3],
    }
}

fn grid4() -> TabularMdp {
    // (row, col) of each cell; moves: up, right, down, left
    const MOVES: [(i32, i32); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
    let wall = |a: usize, b: usize| (a, b) == (0, 2) || (a, b) == (2, 0);
    let mut table = Vec::new();
    for s in 0..4usize {
        let (r, c) = ((s / 2) as i32, (s % 2) as i32);
        let row = MOVES
            .iter()
            .map(|&(dr, dc)| {
                let (nr, nc) = (r + dr, c + dc);
                let mut next = s;
                if (0..2).contains(&nr) && (0..2).contains(&nc) {
                    let cand = (nr * 2 + nc) as usize;
                    if !wall(s, cand) {
                        next = cand;
                    }
                }
                let done = next == 3;
                Outcome {
                    next,
                    reward: if done { 1.0 } else { 0.0 },
                    done,
                }
            })
            .collect();
        table.push(row);
    }
    TabularMdp {
        name: "grid4".into(),
        num_states: 4,
        num_actions: 4,
        table,
        terminal: vec![false, false, false, true],
    }
}

impl TabularMdp {
    pub fn outcome(&self, state: usize, action: usize) -> Result<Outcome> {
        self.table
            .get(state)
            .and_then(|row| row.get(action))
            .copied()
            .ok_or_else(|| Error::Index(format!("no transition for ({state}, {action})")))
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states).filter(|&s| !self.terminal[s])
    }
}

/// Optimal action values by repeated Bellman backups until the largest
/// change is below `tol`. Terminal states keep value 0.
pub fn value_iteration(mdp: &TabularMdp, gamma: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&gamma) {
        return contract(format!("discount {gamma} outside [0, 1)"));
    }
    let mut q = vec![vec![0.0; mdp.num_actions]; mdp.num_states];
    loop {
        let v: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(s, row)| {
                if mdp.terminal[s] {
                    0.0
                } else {
                    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect();
        let mut delta = 0.0f64;
        for s in mdp.non_terminal_states() {
            for a in 0..mdp.num_actions {
                let o = mdp.table[s][a];
                let target = o.reward + if o.done { 0.0 } else { gamma * v[o.next] };
                delta = delta.max((target - q[s][a]).abs());
                q[s][a] = target;
            }
        }
        if delta < tol {
            return Ok(q);
        }
    }
}

/// Episodic wrapper: episodes start in a uniformly random non-terminal state.
#[derive(Clone, Debug)]
pub struct TabularEnv {
    pub mdp: TabularMdp,
    pub max_steps: usize,
    state: usize,
    ticks: usize,
}

impl TabularEnv {
    pub fn new(mdp: TabularMdp, max_steps: usize) -> Self {
        Self {
            mdp,
            max_steps,
            state: 0,
            ticks: 0,
        }
    }

    pub fn encode(&self, state: usize) -> SparseFeatures {
        SparseFeatures::one_hot(self.mdp.num_states, state)
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn reset(&mut self, rng: &mut impl Rng) -> usize {
        let starts: Vec<usize> = self.mdp.non_terminal_states().collect();
        self.state = starts[rng.gen_range(0..starts.len())];
        self.ticks = 0;
        self.state
    }

    /// Returns `(next_state, reward, done)`.
    pub fn step(&mut self, action: usize) -> Result<(usize, f64, bool)> {
        let o = self.mdp.outcome(self.state, action)?;
        self.state = o.next;
        self.ticks += 1;
        Ok((o.next, o.reward, o.done || self.ticks >= self.max_steps))
    }
}
