//! Information-theoretic pruning of feed-forward networks.
//!
//! Connections between adjacent layers are scored with a hash-based
//! estimator of adaptive conditional mutual information, sensitive filters
//! are protected, and the weakest group pairs are pruned under per-layer
//! limits chosen from classifier quality curves.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! thread-pool execution live in the companion `snacs` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod estimator;
pub mod exec;
pub mod matrix;
pub mod network;
pub mod planner;
pub mod pruning;
pub mod sensitivity;
pub mod stats;
pub mod tensor;
pub mod toynet;
pub mod validation;

pub use error::{Error, Result};
pub use estimator::{
    estimate_acmi, estimate_ami, EdgeRule, Estimate, EstimatorConfig, HashConfig, PhiSpec, PhiVariant,
};
pub use exec::{Executor, Serial};
pub use matrix::Matrix;
pub use network::{Layer, LayerKind, Network};
pub use planner::{assign_gammas, PrunePlan, QualityCurve};
pub use pruning::{prune_network, PruneConfig, PruneMask, PruneReport};
pub use tensor::{ActivationSet, DType, Tensor, WeightKernel};
