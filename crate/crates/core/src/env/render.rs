//! Native 84×84 grayscale rendering and four-frame stacking.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use super::world::{Tile, WorldSpec, MAX_HEIGHT};
use crate::error::{Error, Result};
use crate::features::{Featurize, SparseFeatures};

pub const FRAME_SIZE: usize = 84;
pub const TILE_PX: usize = FRAME_SIZE / MAX_HEIGHT;
pub const WINDOW_TILES: usize = FRAME_SIZE / TILE_PX;
/// Window column the agent is drawn in; the view scrolls with it.
pub const AGENT_COLUMN: usize = 1;
pub const STACK_DEPTH: usize = 4;
pub const OBSERVATION_LEN: usize = STACK_DEPTH * FRAME_SIZE * FRAME_SIZE;

/// Gray levels, stored as `level / 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Shade {
    Sky = 0,
    Flag = 1,
    Ground = 2,
    Block = 3,
    Agent = 4,
}

pub const SHADE_LEVELS: u8 = 4;

impl Shade {
    pub fn value(self) -> f64 {
        f64::from(self as u8) / f64::from(SHADE_LEVELS)
    }
}

/// One 84×84 frame of shade indices, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame(Vec<u8>);

impl Frame {
    pub fn blank() -> Self {
        Self(vec![Shade::Sky as u8; FRAME_SIZE * FRAME_SIZE])
    }

    pub fn level(&self, row: usize, col: usize) -> u8 {
        self.0[row * FRAME_SIZE + col]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        f64::from(self.level(row, col)) / f64::from(SHADE_LEVELS)
    }

    pub fn levels(&self) -> &[u8] {
        &self.0
    }

    fn fill_tile(&mut self, tile_row: usize, tile_col: usize, shade: Shade) {
        for r in tile_row * TILE_PX..(tile_row + 1) * TILE_PX {
            self.0[r * FRAME_SIZE + tile_col * TILE_PX..r * FRAME_SIZE + (tile_col + 1) * TILE_PX].fill(shade as u8);
        }
    }

    /// Plain-text PGM (`P2`) with maxval 4.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{FRAME_SIZE} {FRAME_SIZE}\n{SHADE_LEVELS}\n");
        for row in self.0.chunks_exact(FRAME_SIZE) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_pgm(text: &str) -> Result<Self> {
        let mut toks = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace);
        let bad = |m: &str| Error::Parse {
            line: 0,
            message: m.to_string(),
        };
        if toks.next() != Some("P2") {
            return Err(bad("expected P2 magic"));
        }
        let mut num = || -> Result<usize> {
            toks.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("truncated or non-numeric PGM"))
        };
        let (w, h, max) = (num()?, num()?, num()?);
        if w != FRAME_SIZE || h != FRAME_SIZE || max != usize::from(SHADE_LEVELS) {
            return Err(bad("frame must be 84×84 with maxval 4"));
        }
        let mut px = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            let v = num()?;
            if v > max {
                return Err(bad("pixel above maxval"));
            }
            px.push(v as u8);
        }
        Ok(Self(px))
    }
}

/// Draws the window `[agent_x - 1, agent_x + 5]` with the agent at
/// `altitude` tiles above the bottom row. Worlds shorter than the window are
/// bottom-aligned under open sky.
pub fn render_frame(world: &WorldSpec, agent_x: usize, altitude: usize) -> Frame {
    let mut frame = Frame::blank();
    let pad = WINDOW_TILES - world.height();
    for wc in 0..WINDOW_TILES {
        let Some(x) = (agent_x + wc).checked_sub(AGENT_COLUMN) else {
            continue;
        };
        for row in 0..world.height() {
            let shade = match world.tile(x, row) {
                Tile::Empty => continue,
                Tile::Ground => Shade::Ground,
                Tile::Block => Shade::Block,
                Tile::Flag => Shade::Flag,
            };
            frame.fill_tile(pad + row, wc, shade);
        }
    }
    let agent_row = WINDOW_TILES - 1 - altitude.min(WINDOW_TILES - 1);
    frame.fill_tile(agent_row, AGENT_COLUMN, Shade::Agent);
    frame
}

/// Four frames, oldest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    frames: [Arc<Frame>; STACK_DEPTH],
}

impl Observation {
    pub fn frames(&self) -> &[Arc<Frame>; STACK_DEPTH] {
        &self.frames
    }

    pub const fn shape() -> [usize; 3] {
        [STACK_DEPTH, FRAME_SIZE, FRAME_SIZE]
    }

    /// Frame-major, then row-major.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(OBSERVATION_LEN);
        for f in &self.frames {
            out.extend(f.levels().iter().map(|&v| f64::from(v) / f64::from(SHADE_LEVELS)));
        }
        out
    }
}

impl Featurize for Observation {
    fn features(&self) -> SparseFeatures {
        let per = FRAME_SIZE * FRAME_SIZE;
        SparseFeatures::from_pairs(
            OBSERVATION_LEN,
            self.frames.iter().enumerate().flat_map(|(f, frame)| {
                frame
                    .levels()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(move |(i, &v)| (f * per + i, f64::from(v) / f64::from(SHADE_LEVELS)))
            }),
        )
    }
}

/// FIFO of the most recent frames. A fresh stack repeats its first frame.
#[derive(Clone, Debug, Default)]
pub struct FrameStack {
    frames: VecDeque<Arc<Frame>>,
}

impl FrameStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn reset(&mut self, first: Frame) -> Observation {
        let first = Arc::new(first);
        self.frames = std::iter::repeat_n(first, STACK_DEPTH).collect();
        self.observation()
    }

    pub fn push(&mut self, frame: Frame) -> Observation {
        if self.frames.is_empty() {
            return self.reset(frame);
        }
        if self.frames.len() == STACK_DEPTH {
            self.frames.pop_front();
        }
        self.frames.push_back(Arc::new(frame));
        self.observation()
    }

    fn observation(&self) -> Observation {
        Observation {
            frames: std::array::from_fn(|i| self.frames[i].clone()),
        }
    }
}

/// Pushes `new_frame` onto `history` and returns the resulting observation.
pub fn stack_frames(history: &mut FrameStack, new_frame: Frame) -> Observation {
    history.push(new_frame)
}
