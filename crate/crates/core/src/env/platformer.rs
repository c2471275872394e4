//! Deterministic two-action side-scroller.
//!
//! Walking advances one column unless the next column is taller than the
//! agent (blocked) and kills the agent if the next column is a gap. A jump
//! is a fixed 4-tick arc: heights `+1, +2, +1, 0` above take-off, advancing
//! one column on each of the first three ticks, so it clears gaps of at most
//! two columns when started at the edge. The agent lands early on any column
//! whose surface reaches its height; actions are ignored while airborne.
//!
//! Reward per tick is forward progress, minus 0.1, plus 50 on reaching the
//! flag column, minus 25 on falling into a gap.

use super::render::{render_frame, FrameStack, Observation};
use super::world::WorldSpec;
use crate::error::{contract, Result};

pub const TICK_PENALTY: f64 = 0.1;
pub const FLAG_BONUS: f64 = 50.0;
pub const DEATH_PENALTY: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    WalkRight = 0,
    JumpRight = 1,
}

impl Action {
    pub const COUNT: usize = 2;

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Action::WalkRight),
            1 => Ok(Action::JumpRight),
            _ => contract(format!("action {i} outside 0..2")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Airborne {
    phase: usize,
    base: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct StepInfo {
    pub x: usize,
    pub altitude: usize,
    pub ticks: usize,
    pub reached_flag: bool,
    pub died: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Clone, Debug)]
pub struct Platformer {
    world: WorldSpec,
    x: usize,
    altitude: usize,
    air: Option<Airborne>,
    ticks: usize,
    done: bool,
    frames: FrameStack,
    seed: u64,
}

impl Platformer {
    pub fn new(world: WorldSpec) -> Self {
        let x = world.start_x();
        let altitude = world.start_surface();
        Self {
            world,
            x,
            altitude,
            air: None,
            ticks: 0,
            done: true,
            frames: FrameStack::new(),
            seed: 0,
        }
    }

    pub fn world(&self) -> &WorldSpec {
        &self.world
    }

    /// Seed of the current episode. Dynamics are fully deterministic; the
    /// seed is kept so episodes can be labelled and replayed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> (usize, usize) {
        (self.x, self.altitude)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self, seed: u64) -> Observation {
        self.seed = seed;
        self.x = self.world.start_x();
        self.altitude = self.world.start_surface();
        self.air = None;
        self.ticks = 0;
        self.done = false;
        self.frames.reset(render_frame(&self.world, self.x, self.altitude))
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.done {
            return contract("step called on a finished episode");
        }
        let x0 = self.x;
        let mut died = false;
        match (self.air, action) {
            (None, Action::WalkRight) => {
                let next = self.x + 1;
                let s = self.world.surface(next);
                if s <= self.altitude {
                    self.x = next;
                    self.altitude = s;
                    died = s == 0;
                }
            }
            (None, Action::JumpRight) => {
                self.air = Some(Airborne {
                    phase: 0,
                    base: self.altitude,
                });
                died = self.advance_arc();
            }
            (Some(_), _) => died = self.advance_arc(),
        }
        self.ticks += 1;
        let reached_flag = !died && self.x >= self.world.flag_x();
        let truncated = !died && !reached_flag && self.ticks >= self.world.max_steps;
        self.done = died || reached_flag || truncated;

        let mut reward = (self.x - x0) as f64 - TICK_PENALTY;
        if reached_flag {
            reward += FLAG_BONUS;
        }
        if died {
            reward -= DEATH_PENALTY;
        }
        let observation = self.frames.push(render_frame(&self.world, self.x, self.altitude));
        Ok(StepResult {
            observation,
            reward,
            done: self.done,
            info: StepInfo {
                x: self.x,
                altitude: self.altitude,
                ticks: self.ticks,
                reached_flag,
                died,
                truncated,
            },
        })
    }

    /// One tick of the jump arc; returns true if the agent fell into a gap.
    fn advance_arc(&mut self) -> bool {
        let air = self.air.expect("airborne");
        let (advance, rise) = self.world.jump_arc[air.phase];
        let height = air.base + rise;
        if advance > 0 && self.world.surface(self.x + advance) <= height {
            self.x += advance;
        }
        self.altitude = height;
        let s = self.world.surface(self.x);
        if s > 0 && s >= height {
            self.altitude = s;
            self.air = None;
            return false;
        }
        if air.phase + 1 == self.world.jump_arc.len() {
            self.air = None;
            self.altitude = s;
            return s == 0;
        }
        self.air = Some(Airborne {
            phase: air.phase + 1,
            ..air
        });
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(text: &str) -> Platformer {
        Platformer::new(text.parse().unwrap())
    }

    #[test]
    fn walk_on_flat_ground() {
        let mut env = world(".....F\n.M....\n######\n");
        env.reset(0);
        let r = env.step(Action::WalkRight).unwrap();
        assert_eq!(r.info.x, 2);
        assert!((r.reward - 0.9).abs() < 1e-12);
        assert!(!r.done);
    }

    #[test]
    fn walking_into_gap_kills() {
        let mut env = world(".....F\n.M....\n##.###\n");
        env.reset(0);
        let r = env.step(Action::WalkRight).unwrap();
        assert!(r.done && r.info.died);
        assert!((r.reward - (1.0 - 0.1 - 25.0)).abs() < 1e-12);
        assert!(env.step(Action::WalkRight).is_err());
    }

    #[test]
    fn jump_clears_two_gap() {
        let mut env = world("......F\n.M.....\n##..###\n");
        env.reset(0);
        let mut last = None;
        for _ in 0..4 {
            let r = env.step(Action::JumpRight).unwrap();
            assert!(!r.info.died);
            last = Some(r);
        }
        let r = last.unwrap();
        assert_eq!((r.info.x, r.info.altitude), (4, 1));
        assert!(!r.done);
    }

    #[test]
    fn jump_fails_on_three_gap() {
        let mut env = world(".......F\n.M......\n##...###\n");
        env.reset(0);
        let mut died = false;
        for _ in 0..4 {
            died |= env.step(Action::JumpRight).unwrap().info.died;
        }
        assert!(died);
    }

    #[test]
    fn blocks_stop_walking_and_can_be_climbed() {
        let mut env = world(".....F\n.M.B..\n######\n");
        env.reset(0);
        env.step(Action::WalkRight).unwrap();
        let r = env.step(Action::WalkRight).unwrap();
        assert_eq!(r.info.x, 2);
        assert!((r.reward + 0.1).abs() < 1e-12);
        let r = env.step(Action::JumpRight).unwrap();
        assert_eq!((r.info.x, r.info.altitude), (3, 2));
        let r = env.step(Action::WalkRight).unwrap();
        assert_eq!((r.info.x, r.info.altitude), (4, 1));
    }

    #[test]
    fn flag_ends_episode_with_bonus() {
        let mut env = world("..F\nM..\n###\n");
        env.reset(0);
        env.step(Action::WalkRight).unwrap();
        let r = env.step(Action::WalkRight).unwrap();
        assert!(r.done && r.info.reached_flag);
        assert!((r.reward - (0.9 + 50.0)).abs() < 1e-12);
    }

    #[test]
    fn step_limit_truncates() {
        let mut spec: WorldSpec = ".....F\n.MB...\n######\n".parse().unwrap();
        spec.max_steps = 3;
        let mut env = Platformer::new(spec);
        env.reset(0);
        let mut r = None;
        for _ in 0..3 {
            r = Some(env.step(Action::WalkRight).unwrap());
        }
        let r = r.unwrap();
        assert!(r.done && r.info.truncated && !r.info.died);
    }
}
