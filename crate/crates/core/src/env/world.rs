//! Tile maps for the platformer.
//!
//! A world file is a rectangle of characters, one per tile, top row first:
//!
//! | char | tile                                   |
//! |------|----------------------------------------|
//! | `.`  | empty                                  |
//! | `#`  | ground (solid)                         |
//! | `B`  | block (solid, stacks on ground)        |
//! | `F`  | flag; reaching its column ends the run |
//! | `M`  | start position (empty tile)            |
//!
//! Lines starting with `;` are comments. Physics only looks at each
//! column's surface: the number of contiguous solid tiles counted up from
//! the bottom row. A column with surface 0 is a gap.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_WORLD: &str = include_str!("../../worlds/default.txt");

/// Tallest world the 84×84 renderer can show (7 rows of 12 px).
pub const MAX_HEIGHT: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tile {
    Empty,
    Ground,
    Block,
    Flag,
}

impl Tile {
    pub fn is_solid(self) -> bool {
        matches!(self, Tile::Ground | Tile::Block)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldSpec {
    width: usize,
    height: usize,
    /// Row-major, top row first.
    tiles: Vec<Tile>,
    start_x: usize,
    flag_x: usize,
    surfaces: Vec<usize>,
    /// Per jump tick: (horizontal advance, height above take-off).
    pub jump_arc: [(usize, usize); 4],
    pub max_steps: usize,
}

pub const DEFAULT_JUMP_ARC: [(usize, usize); 4] = [(1, 1), (1, 2), (1, 1), (0, 0)];
pub const DEFAULT_MAX_STEPS: usize = 1000;

impl WorldSpec {
    pub fn default_world() -> Self {
        DEFAULT_WORLD.parse().expect("bundled world is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start_x(&self) -> usize {
        self.start_x
    }

    pub fn flag_x(&self) -> usize {
        self.flag_x
    }

    /// Tile at `(x, row)`, row 0 at the top; outside the map is empty.
    pub fn tile(&self, x: usize, row: usize) -> Tile {
        if x >= self.width || row >= self.height {
            Tile::Empty
        } else {
            self.tiles[row * self.width + x]
        }
    }

    /// Solid height of column `x`; columns past the right edge are gaps.
    pub fn surface(&self, x: usize) -> usize {
        self.surfaces.get(x).copied().unwrap_or(0)
    }

    pub fn start_surface(&self) -> usize {
        self.surface(self.start_x)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for x in 0..self.width {
                out.push(if row == self.height - 1 - self.start_surface() && x == self.start_x {
                    'M'
                } else {
                    match self.tile(x, row) {
                        Tile::Empty => '.',
                        Tile::Ground => '#',
                        Tile::Block => 'B',
                        Tile::Flag => 'F',
                    }
                });
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for WorldSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            rows.push((i + 1, line));
        }
        let height = rows.len();
        if !(2..=MAX_HEIGHT).contains(&height) {
            return Err(Error::Config(format!("world height {height} outside 2..={MAX_HEIGHT}")));
        }
        let width = rows[0].1.chars().count();
        if width < 2 {
            return Err(Error::Config("world must be at least 2 tiles wide".into()));
        }
        let mut tiles = Vec::with_capacity(width * height);
        let mut start = None;
        let mut flags = Vec::new();
        for (r, &(ln, line)) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(perr(
                    ln,
                    format!("row has {} tiles, expected {width}", line.chars().count()),
                ));
            }
            for (x, c) in line.chars().enumerate() {
                tiles.push(match c {
                    '.' => Tile::Empty,
                    '#' => Tile::Ground,
                    'B' => Tile::Block,
                    'F' => {
                        flags.push(x);
                        Tile::Flag
                    }
                    'M' => {
                        if start.replace((x, r)).is_some() {
                            return Err(perr(ln, "more than one start tile".into()));
                        }
                        Tile::Empty
                    }
                    other => return Err(perr(ln, format!("unknown tile `{other}`"))),
                });
            }
        }
        if flags.len() != 1 {
            return Err(Error::Config(format!(
                "world needs exactly one flag, found {}",
                flags.len()
            )));
        }
        let (start_x, start_row) = start.ok_or_else(|| Error::Config("world has no start tile".into()))?;
        let surfaces: Vec<usize> = (0..width)
            .map(|x| {
                (0..height)
                    .rev()
                    .take_while(|&row| tiles[row * width + x].is_solid())
                    .count()
            })
            .collect();
        if surfaces[start_x] == 0 || start_row != height - 1 - surfaces[start_x] {
            return Err(Error::Config("start tile must stand directly on solid ground".into()));
        }
        let flag_x = flags[0];
        if flag_x <= start_x {
            return Err(Error::Config("flag must lie to the right of the start".into()));
        }
        Ok(Self {
            width,
            height,
            tiles,
            start_x,
            flag_x,
            surfaces,
            jump_arc: DEFAULT_JUMP_ARC,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }
}
