//! Pipeline domain types: components and their semantic versions, pipeline
//! DAGs, bound pipeline versions, and the schema/compatibility predicates.

mod component;
mod metafile;
mod pipeline;
mod schema;
mod version;

use thiserror::Error;

pub use component::{is_compatible, ComponentId, ComponentKind, ComponentVersion};
pub use metafile::{ComponentMeta, METAFILE_NAME};
pub use pipeline::{validate_dag, PipelineSpec, PipelineVersion, Slot};
pub use schema::{canonical_headers, schema_hash, InputSchema};
pub use version::{next_version, SemanticVersion, VersionLabel, MASTER};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("pipeline graph contains a cycle")]
    CycleDetected,
    #[error("edge {from} -> {to} names an unknown slot")]
    DanglingEdge { from: String, to: String },
    #[error("pipeline has no slots")]
    EmptySpec,
    #[error("duplicate slot `{0}`")]
    DuplicateSlot(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("slot `{0}` is not bound")]
    UnboundSlot(String),
    #[error("slot `{slot}` expects a {expected}, got a {found}")]
    KindMismatch {
        slot: String,
        expected: ComponentKind,
        found: ComponentKind,
    },
    #[error("incompatible edge {from} -> {to}")]
    IncompatibleEdge { from: String, to: String },
    #[error("schema_changed={flagged} but the schema digest {}", if *digest_changed { "changed" } else { "did not change" })]
    SchemaFlagMismatch { flagged: bool, digest_changed: bool },
    #[error("invalid version `{0}`")]
    BadVersion(String),
    #[error("invalid component kind `{0}`")]
    BadKind(String),
    #[error("invalid component name `{0}`")]
    BadName(String),
    #[error("pipeline spec line {0}: `{1}`")]
    BadSpecLine(usize, String),
    #[error("metafile: {0}")]
    Meta(#[from] crate::kv::KvError),
}
