//! Proximal policy optimization with multi-batch experience replay.
//!
//! The learner is generic over the scalar type. The aliases below fix it to
//! `f64` (the default everywhere in the CLI) or `f32`.

pub mod cli;
pub mod envs;
pub mod error;
pub mod estimation;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod policy;
pub mod replay;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use trainer::{train, ConfigBuilder, TrainConfig, Trainer};

pub type Trainer64 = trainer::Trainer<f64>;
pub type Trainer32 = trainer::Trainer<f32>;
pub type PolicyParams64 = policy::PolicyParams<f64>;
pub type PolicyParams32 = policy::PolicyParams<f32>;
pub type ValueParams64 = policy::ValueParams<f64>;
pub type ValueParams32 = policy::ValueParams<f32>;
pub type MiniBatch64 = loss::MiniBatch<f64>;
pub type MiniBatch32 = loss::MiniBatch<f32>;
pub type ReplayMemory64 = replay::ReplayMemory<f64>;
pub type ReplayMemory32 = replay::ReplayMemory<f32>;
pub type Trajectory64 = estimation::Trajectory<f64>;
pub type Trajectory32 = estimation::Trajectory<f32>;
