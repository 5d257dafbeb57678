use std::collections::HashMap;

use crate::exec::{ArtifactRef, Scores};
use crate::model::ComponentId;
use crate::vcs::Commit;

/// Archived outputs keyed by lineage: the versions of a slot and of
/// everything upstream of it. Equal lineage means equal output, so a run
/// can skip any slot whose lineage is already present.
#[derive(Clone, Debug, Default)]
pub struct ReuseIndex {
    entries: HashMap<Vec<ComponentId>, (ArtifactRef, Scores)>,
}

impl ReuseIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index every slot output of `commit`. Pipeline scores are attached to
    /// the sink slots, which are the ones that produce them.
    pub fn add_commit(&mut self, commit: &Commit) {
        let spec = commit.pipeline.spec();
        for (i, slot) in spec.slots().iter().enumerate() {
            let Some(out) = commit.outputs.get(&slot.name) else {
                continue;
            };
            let scores = if spec.successor_indices(i).is_empty() {
                commit.scores.clone()
            } else {
                Scores::new()
            };
            self.entries
                .entry(commit.lineage(i))
                .or_insert((*out, scores));
        }
    }

    pub fn insert(&mut self, lineage: Vec<ComponentId>, output: ArtifactRef, scores: Scores) {
        self.entries.insert(lineage, (output, scores));
    }

    pub fn get(&self, lineage: &[ComponentId]) -> Option<&(ArtifactRef, Scores)> {
        self.entries.get(lineage)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
