use std::sync::Arc;

use crate::model::{ComponentVersion, PipelineSpec};
use crate::vcs::Commit;

/// Candidate versions per slot, indexed like the spec's slots, each list
/// sorted by `(schema_ordinal, increment, branch)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchSpace {
    spec: Arc<PipelineSpec>,
    slots: Vec<Vec<ComponentVersion>>,
}

impl SearchSpace {
    /// Build from explicit version lists (deduplicated and sorted here).
    pub fn new(spec: Arc<PipelineSpec>, slots: Vec<Vec<ComponentVersion>>) -> Self {
        assert_eq!(spec.len(), slots.len(), "one version list per slot");
        let slots = slots
            .into_iter()
            .map(|mut v| {
                v.sort_by(|a, b| a.version.cmp(&b.version));
                v.dedup_by(|a, b| a.id() == b.id());
                v
            })
            .collect();
        SearchSpace { spec, slots }
    }

    /// Union of the versions bound in `commits`, per slot.
    pub fn from_commits<'a>(spec: Arc<PipelineSpec>, commits: impl IntoIterator<Item = &'a Arc<Commit>>) -> Self {
        let mut slots: Vec<Vec<ComponentVersion>> = vec![Vec::new(); spec.len()];
        for c in commits {
            for (i, v) in c.pipeline.bindings().iter().enumerate() {
                if !slots[i].iter().any(|x| x.id() == v.id()) {
                    slots[i].push(v.clone());
                }
            }
        }
        Self::new(spec, slots)
    }

    pub fn spec(&self) -> &Arc<PipelineSpec> {
        &self.spec
    }

    pub fn versions(&self, slot: usize) -> &[ComponentVersion] {
        &self.slots[slot]
    }

    /// Space size per slot, in spec order.
    pub fn sizes(&self) -> Vec<usize> {
        self.slots.iter().map(Vec::len).collect()
    }

    /// Space size per tree level (the spec's topological order).
    pub fn level_sizes(&self) -> Vec<usize> {
        self.spec.topo_order().iter().map(|&s| self.slots[s].len()).collect()
    }

    pub fn position(&self, slot: usize, c: &ComponentVersion) -> Option<usize> {
        self.slots[slot].iter().position(|v| v.id() == c.id())
    }
}
