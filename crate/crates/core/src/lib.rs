//! Beam and handoff prediction for drones served by a THz base station and a
//! flying reconfigurable intelligent surface (RIS).
//!
//! The pipeline runs scene geometry → per-point channels → exhaustive beam
//! labels → trajectory datasets → GRU training and evaluation.

pub mod beams;
pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod scene;
pub mod seqmodel;

pub use beams::{Codebook, LabeledGrid, Labeler, Link, LinkLabel};
pub use config::Config;
pub use dataset::{Dataset, Step, TrajectorySequence, SEQUENCE_LENGTH};
pub use error::{Error, Result};
pub use geometry::{Aabb, Vec3};
pub use harness::{Metrics, ModelConfig, TrainConfig, TrainRun};
pub use scene::{GridIndex, GridSpec, Scene, StepPolicy};
pub use seqmodel::{Example, ModelParams, ModelShape, Task};

/// Independent sub-seed for stream `tag` of a master seed (splitmix64).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
