//! Component execution: the executor protocol, the deterministic stub
//! toolkit, the store-backed runner and the CET/CST/CPT/CSS ledger.

mod executor;
mod metrics;
mod process;
mod runner;
mod stub;

use thiserror::Error;

pub use executor::{
    lineage_string, parse_scores, schema_headers, split_output, ExecOutcome, ExecRequest, Executor,
    InputArtifact, Scores, DATA_PREFIX, DEFAULT_METRIC, SCHEMA_FILE, SCORE_FILE,
};
pub use metrics::{speedup, LedgerSnapshot, MetricsLedger, RunStats};
pub use process::ProcessExecutor;
pub use runner::{
    ArtifactRef, ComponentRun, ComponentRunner, NodeListOutcome, PathStep, StepResult, TimeMode,
};
pub use stub::{
    hash_score, make_stub_component, ScoreFn, StubExecutor, StubRole, StubSpec, STUB_CONF,
    STUB_SLEEP_ENV,
};

use crate::digest::Digest;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("component exited with status {code:?}: {stderr_tail}")]
    NonZeroExit {
        code: Option<i32>,
        stderr_tail: String,
    },
    #[error("component did not produce {0}")]
    MissingOutput(String),
    #[error("{component} declares output schema {} but produced {}", declared.short(), produced.short())]
    SchemaMismatch {
        component: String,
        declared: Digest,
        produced: Digest,
    },
    #[error("{component} cannot consume the output of slot `{upstream}`")]
    IncompatibleInput { component: String, upstream: String },
    #[error("bad stub config: {0}")]
    BadConfig(String),
    #[error("bad payload: {0}")]
    BadPayload(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("unparseable score file: `{0}`")]
    BadScore(String),
    #[error("speedup needs 0 <= p <= 1 and k >= 1, got p={p}, k={k}")]
    OutOfDomain { p: f64, k: f64 },
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error(transparent)]
    Bundle(#[from] crate::bundle::BundleError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}
