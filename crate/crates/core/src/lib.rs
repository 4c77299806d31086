//! Multi-task regression toolkit for workload prediction.
//!
//! The library covers the full benchmark pipeline used to compare three
//! approaches on tabular per-facility data:
//!
//! - **single-task learning**: one pooled regressor per method
//!   (lasso, ridge, regression tree, random forest),
//! - **cluster-based single-task learning**: k-means partitioning (with the
//!   gap statistic choosing the cluster count) and one regressor per cluster,
//!   test rows routed to the nearest centroid's model,
//! - **multi-task learning**: a joint least-squares model over all tasks with
//!   an L2,1 (column-wise group) penalty, solved by accelerated proximal
//!   gradient descent.
//!
//! Supporting modules handle CSV ingestion and preprocessing ([`data`]),
//! task-stratified k-fold splits, evaluation metrics and the replication
//! harness ([`pipeline`]), synthetic dataset generation ([`simgen`]) and a
//! plain-text model format ([`model_io`]).
//!
//! All randomness flows from caller-provided `u64` seeds through the
//! derivation scheme in [`rng`], so every entry point is deterministic and
//! parallel runs agree with serial ones.

pub mod clustering;
pub mod data;
pub mod error;
mod linalg;
pub mod linear;
pub mod model_io;
pub mod mtl;
pub mod pipeline;
pub mod regressor;
pub mod rng;
pub mod simgen;
pub mod tree;

pub use error::{Error, Result};
