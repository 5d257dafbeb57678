use std::collections::BTreeMap;
use std::sync::Arc;

use crate::digest::Digest;
use crate::exec::{ArtifactRef, RunStats, Scores};
use crate::kv::KvDoc;
use crate::model::{ComponentId, ComponentVersion, PipelineSpec, PipelineVersion};
use crate::vcs::VcsError;

pub type CommitId = Digest;

/// Outputs, scores and statistics of one processed pipeline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineRun {
    /// Slot name → archived output.
    pub outputs: BTreeMap<String, ArtifactRef>,
    pub scores: Scores,
    pub stats: RunStats,
    /// Slots actually executed (as opposed to reused).
    pub executed: Vec<String>,
}

/// An immutable pipeline commit.
#[derive(Clone, Debug, PartialEq)]
pub struct Commit {
    pub id: CommitId,
    pub branch: String,
    pub parents: Vec<CommitId>,
    pub sequence: u64,
    pub pipeline: PipelineVersion,
    pub outputs: BTreeMap<String, ArtifactRef>,
    pub scores: Scores,
    pub stats: RunStats,
}

impl Commit {
    pub(crate) fn build(
        branch: &str,
        parents: Vec<CommitId>,
        sequence: u64,
        pipeline: PipelineVersion,
        run: &PipelineRun,
    ) -> Commit {
        let mut commit = Commit {
            id: Digest::ZERO,
            branch: branch.to_string(),
            parents,
            sequence,
            pipeline,
            outputs: run.outputs.clone(),
            scores: run.scores.clone(),
            stats: run.stats,
        };
        commit.id = Digest::of(commit.record().as_bytes());
        commit
    }

    pub fn is_merge(&self) -> bool {
        self.parents.len() == 2
    }

    pub fn short_id(&self) -> String {
        self.id.short()
    }

    pub fn score(&self, metric: &str) -> Option<f64> {
        self.scores.get(metric).copied()
    }

    /// The component bound to `slot`.
    pub fn binding(&self, slot: &str) -> Option<&ComponentVersion> {
        self.pipeline.get(slot)
    }

    /// Ids of the components this commit's `slot` output depends on,
    /// ending with the slot's own component.
    pub fn lineage(&self, slot: usize) -> Vec<ComponentId> {
        self.pipeline
            .spec()
            .ancestry(slot)
            .into_iter()
            .map(|s| self.pipeline.at(s).id())
            .collect()
    }

    /// Text record; the commit id is the SHA-256 of exactly these bytes.
    pub fn record(&self) -> String {
        let mut doc = KvDoc::new();
        doc.push("branch", &self.branch)
            .push(
                "parents",
                self.parents
                    .iter()
                    .map(|p| p.to_hex())
                    .collect::<Vec<_>>()
                    .join(","),
            )
            .push("sequence", self.sequence);
        for (slot, c) in self.pipeline.iter() {
            doc.push("bind", format!("{slot}={}", c.id()));
        }
        for (slot, out) in &self.outputs {
            doc.push("output", format!("{slot}={}", out.object));
        }
        for (metric, value) in &self.scores {
            doc.push("score", format!("{metric}={value}"));
        }
        doc.push("stats.execution_time", self.stats.execution_time)
            .push("stats.storage_time", self.stats.storage_time)
            .push("stats.storage_bytes_delta", self.stats.storage_bytes_delta);
        doc.render()
    }

    /// Parse a record, resolving bindings through `lookup`.
    pub(crate) fn parse(
        text: &str,
        spec: &Arc<PipelineSpec>,
        lookup: impl Fn(&ComponentId) -> Option<ComponentVersion>,
    ) -> Result<Commit, VcsError> {
        let id = Digest::of(text.as_bytes());
        let corrupt = |detail: String| VcsError::Corrupt {
            what: format!("commit {}", id.short()),
            detail,
        };
        let doc = KvDoc::parse(text).map_err(|e| corrupt(e.to_string()))?;
        let pair = |v: &str| {
            v.split_once('=')
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .ok_or_else(|| corrupt(format!("expected slot=value, got `{v}`")))
        };
        let branch = doc.require("branch").map_err(|e| corrupt(e.to_string()))?.to_string();
        let parents = doc
            .require("parents")
            .map_err(|e| corrupt(e.to_string()))?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| corrupt(format!("bad parent `{s}`"))))
            .collect::<Result<Vec<Digest>, _>>()?;
        let sequence: u64 = doc
            .parse_value("sequence")
            .map_err(|e| corrupt(e.to_string()))?
            .ok_or_else(|| corrupt("missing sequence".into()))?;
        let mut bindings = BTreeMap::new();
        for v in doc.get_all("bind") {
            let (slot, cid) = pair(v)?;
            let cid: ComponentId = cid.parse().map_err(|e| corrupt(format!("{e}")))?;
            let c = lookup(&cid).ok_or_else(|| VcsError::UnknownComponent(cid.to_string()))?;
            bindings.insert(slot, c);
        }
        let pipeline = PipelineVersion::new(spec.clone(), bindings)?;
        let mut outputs = BTreeMap::new();
        for v in doc.get_all("output") {
            let (slot, obj) = pair(v)?;
            let c = pipeline
                .get(&slot)
                .ok_or_else(|| corrupt(format!("output for unknown slot `{slot}`")))?;
            let object = obj.parse().map_err(|_| corrupt(format!("bad output id `{obj}`")))?;
            outputs.insert(
                slot,
                ArtifactRef {
                    object,
                    schema: c.output_schema,
                },
            );
        }
        let mut scores = Scores::new();
        for v in doc.get_all("score") {
            let (metric, value) = pair(v)?;
            let value = value.parse().map_err(|_| corrupt(format!("bad score `{value}`")))?;
            scores.insert(metric, value);
        }
        let num = |key: &str| -> Result<f64, VcsError> {
            Ok(doc
                .parse_value(key)
                .map_err(|e| corrupt(e.to_string()))?
                .unwrap_or(0.0))
        };
        let stats = RunStats {
            execution_time: num("stats.execution_time")?,
            storage_time: num("stats.storage_time")?,
            storage_bytes_delta: doc
                .parse_value("stats.storage_bytes_delta")
                .map_err(|e| corrupt(e.to_string()))?
                .unwrap_or(0),
        };
        let commit = Commit {
            id,
            branch,
            parents,
            sequence,
            pipeline,
            outputs,
            scores,
            stats,
        };
        if commit.record() != text {
            return Err(corrupt("record is not in canonical form".into()));
        }
        Ok(commit)
    }
}
