//! Learning arbitrary Bregman divergences from relative-similarity
//! supervision or regression targets.
//!
//! The generator of the divergence is fit as a max-affine convex function via
//! linear or quadratic programming, and the learned divergence is consumed by
//! clustering, ranking, and nearest-neighbor tasks.

pub mod approx;
pub mod bounds;
pub mod data;
pub mod error;
pub mod experiment;
pub mod interpolant;
pub mod learn;
pub mod model;
pub mod partition;
pub mod solver;
pub mod tasks;

pub use error::{Error, Result};
pub use model::{BregmanEvaluation, FeatureScale, MaxAffineModel};
