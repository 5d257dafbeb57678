//! Metric-driven merge: component search spaces, the pipeline search tree,
//! the compatibility look-up table, reuse-aware tree execution, the merge
//! strategies and the candidate-count formulas.

mod counting;
mod execute;
mod merge;
mod space;
mod tree;

use thiserror::Error;

pub use counting::{count_candidates_upper, execution_counts, pruned_count_bounds, PrunedBounds};
pub use execute::{evaluate_leaf, execute_tree, run_from_scratch, CandidateResult};
pub use merge::{
    commit_winner, compare_candidates, evaluate, metric_merge, select_winner, Evaluation,
    MergeOptions, MergeReport, MergeSession, Strategy,
};
pub use space::SearchSpace;
pub use tree::{CompatibilityLut, NodeId, SearchTree, TreeNode, ROOT};

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("slot `{0}` has an empty search space")]
    EmptySpace(String),
    #[error("no compatible candidate produced a score")]
    NotMergeable,
    #[error("unknown strategy `{0}` (expected naive, full, pc or pcpr)")]
    UnknownStrategy(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Vcs(#[from] crate::vcs::VcsError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
}
