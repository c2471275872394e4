//! Environments: a deterministic side-scrolling platformer with rendered,
//! frame-stacked observations, and tiny tabular MDPs with known optimal values.

pub mod platformer;
pub mod render;
pub mod tabular;
pub mod world;

pub use platformer::{Action, Platformer, StepInfo, StepResult};
pub use render::{
    render_frame, stack_frames, Frame, FrameStack, Observation, Shade, FRAME_SIZE, OBSERVATION_LEN, STACK_DEPTH,
};
pub use tabular::{make_tabular_mdp, value_iteration, TabularEnv, TabularMdp};
pub use world::{Tile, WorldSpec, DEFAULT_WORLD};
