//! Hybrid quantum-classical reinforcement learning with multi-chip QCNN ensembles.
//!
//! The crate is layered bottom-up:
//!
//! * [`statevector`] and [`density`]: dense simulation of small qubit registers.
//! * [`circuit`]: one chip's QCNN (angle embedding, conv/pool layers, Z-string readout).
//! * [`grad`]: exact parameter-shift gradients and a finite-difference oracle.
//! * [`nn`]: dense layers, backprop and Adam, plus the classical baseline network.
//! * [`ensemble`]: k independent chips between a classical pre-layer and an aggregation head.
//! * [`ddqn`]: replay buffer, epsilon-greedy behaviour and the double-Q training step.
//! * [`env`]: a deterministic side-scrolling platformer and tiny tabular MDPs.
//! * [`harness`]: experiment configs, metrics CSVs, checkpoints and run comparison.

pub mod checkpoint;
pub mod circuit;
pub mod ddqn;
pub mod density;
pub mod ensemble;
pub mod env;
pub mod error;
pub mod features;
pub mod grad;
pub mod harness;
pub mod model;
pub mod nn;
pub mod statevector;

pub use error::{Error, Result};
