//! Version control for machine-learning pipelines.
//!
//! Pipelines are DAGs of versioned components (datasets and libraries).
//! Branches evolve independently; merging two branches searches the
//! historical component versions for the best-scoring compatible pipeline,
//! pruning incompatible combinations and reusing archived outputs.

pub mod bench;
pub mod bundle;
pub mod digest;
pub mod exec;
pub mod kv;
pub mod mergex;
pub mod model;
pub mod search;
pub mod store;
pub mod vcs;

pub use digest::Digest;
