//! Prototype-similarity representation learning for open-set recognition.
//!
//! The crate trains a small order-sensitive encoder with three related
//! contrastive objectives over unit-norm embeddings and learnable class
//! prototypes, scores test samples with a Mahalanobis head fitted on the
//! training features, and evaluates the open-set separation with
//! threshold-free ranking metrics. Everything is deterministic given the
//! configured seeds and runs on a plain CPU.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches float intrinsics and error-trait plumbing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod encoder;
pub mod error;
pub mod feature;
pub mod linalg;
pub mod loss;
mod math;
pub mod metrics;
pub mod synth;
pub mod train;
pub mod uncertainty;

pub use error::Error;
pub use feature::{FeatureMatrix, FeatureVector, PrototypeBank};
pub use linalg::Mat;
pub use loss::{ContrastSets, LossConfig, LossMode, LossOutput};
pub use metrics::{MetricsReport, Protocol, ScoreRecord, ScoreSet};
pub use synth::{GeneratorConfig, SequenceSample};
pub use train::{EpochStats, TrainConfig, TrainLog};

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;
