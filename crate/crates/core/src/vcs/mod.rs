//! Branch/commit graph over pipeline versions.
//!
//! A [`Repository`] holds one pipeline spec, the dataset and library
//! component repositories shared by every commit, the commit graph and the
//! branch heads. It lives either in memory or under a directory:
//!
//! ```text
//! HEAD                  current branch name
//! pipeline              spec text
//! refs/<branch>         head commit id (empty for an unborn branch)
//! commits/<id>          commit records
//! components/<name>     one registered version per line
//! store/                object store
//! LOCK                  writer lock
//! ```

mod commit;
mod repo;
mod reuse;

use std::path::PathBuf;

use thiserror::Error;

pub use commit::{Commit, CommitId, PipelineRun};
pub use repo::Repository;
pub(crate) use repo::run_pipeline;
pub use reuse::ReuseIndex;

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("{} already contains a repository or other files", .0.display())]
    AlreadyExists(PathBuf),
    #[error("{} is not a repository", .0.display())]
    NotARepository(PathBuf),
    #[error("repository is locked by another writer ({})", .0.display())]
    Locked(PathBuf),
    #[error("repository was opened read-only")]
    ReadOnly,
    #[error("branch `{0}` already exists")]
    DuplicateBranch(String),
    #[error("unknown branch `{0}`")]
    UnknownBranch(String),
    #[error("invalid branch name `{0}`")]
    BadBranchName(String),
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("branch `{0}` has no commits")]
    EmptyBranch(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component `{name}` is registered as a {existing}")]
    KindConflict {
        name: String,
        existing: crate::model::ComponentKind,
    },
    #[error("incompatible pipeline: {from} -> {to}")]
    IncompatiblePipeline { from: String, to: String },
    #[error("no output recorded for slot `{0}`")]
    MissingOutput(String),
    #[error("commits {0} and {1} share no history")]
    NoCommonAncestor(String, String),
    #[error("`{merge}` cannot be fast-forwarded into `{head}`")]
    NotFastForward { head: String, merge: String },
    #[error("corrupt record {what}: {detail}")]
    Corrupt { what: String, detail: String },
    #[error("running slot `{slot}`: {source}")]
    Run {
        slot: String,
        #[source]
        source: crate::exec::ExecError,
    },
    #[error(transparent)]
    Model(crate::model::ModelError),
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error(transparent)]
    Bundle(#[from] crate::bundle::BundleError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::model::ModelError> for VcsError {
    fn from(e: crate::model::ModelError) -> Self {
        match e {
            crate::model::ModelError::IncompatibleEdge { from, to } => {
                VcsError::IncompatiblePipeline { from, to }
            }
            other => VcsError::Model(other),
        }
    }
}

pub(crate) fn valid_branch_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
