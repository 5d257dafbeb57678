use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use crate::exec::{ArtifactRef, Scores};
use crate::mergex::{MergeError, SearchSpace};
use crate::model::{is_compatible, ComponentId, ComponentVersion, PipelineSpec};
use crate::vcs::Commit;

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    /// 0 for the virtual root; level `k` binds the `k`-th slot in
    /// topological order.
    pub depth: usize,
    /// Spec slot index; `None` for the root.
    pub slot: Option<usize>,
    /// Index into the slot's search space.
    pub choice: usize,
    pub children: Vec<NodeId>,
    pub executed: bool,
    /// Set when running this node failed; its subtree is never run.
    pub failed: bool,
    pub output: Option<ArtifactRef>,
    /// Scores of the complete candidate ending here (leaves only).
    pub scores: Option<Scores>,
}

/// Pairs `(upstream, downstream)` of versions allowed to compose, over the
/// pipeline's edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompatibilityLut {
    pairs: HashSet<(ComponentId, ComponentId)>,
}

impl CompatibilityLut {
    pub fn build(spaces: &SearchSpace) -> Self {
        let mut pairs = HashSet::new();
        for (a, b) in spaces.spec().edges() {
            for up in spaces.versions(a) {
                for down in spaces.versions(b) {
                    if is_compatible(up, down) {
                        pairs.insert((up.id(), down.id()));
                    }
                }
            }
        }
        CompatibilityLut { pairs }
    }

    pub fn allows(&self, up: &ComponentVersion, down: &ComponentVersion) -> bool {
        self.pairs.contains(&(up.id(), down.id()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(ComponentId, ComponentId)> {
        self.pairs.iter()
    }
}

/// The pipeline search tree: one level per slot (topological order), one
/// child per version in the slot's space. Nodes live in an arena; pruned
/// subtrees stay allocated but unreachable.
#[derive(Clone, Debug)]
pub struct SearchTree {
    spaces: SearchSpace,
    nodes: Vec<TreeNode>,
}

impl SearchTree {
    pub fn build(spaces: SearchSpace) -> Result<Self, MergeError> {
        let spec = spaces.spec().clone();
        for (i, s) in spec.slots().iter().enumerate() {
            if spaces.versions(i).is_empty() {
                return Err(MergeError::EmptySpace(s.name.clone()));
            }
        }
        let mut nodes = vec![TreeNode {
            parent: None,
            depth: 0,
            slot: None,
            choice: 0,
            children: Vec::new(),
            executed: true,
            failed: false,
            output: None,
            scores: None,
        }];
        let mut frontier = vec![ROOT];
        for (level, &slot) in spec.topo_order().iter().enumerate() {
            let mut next = Vec::new();
            for &parent in &frontier {
                for choice in 0..spaces.versions(slot).len() {
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        parent: Some(parent),
                        depth: level + 1,
                        slot: Some(slot),
                        choice,
                        children: Vec::new(),
                        executed: false,
                        failed: false,
                        output: None,
                        scores: None,
                    });
                    nodes[parent].children.push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        Ok(SearchTree { spaces, nodes })
    }

    pub fn spaces(&self) -> &SearchSpace {
        &self.spaces
    }

    pub fn spec(&self) -> &Arc<PipelineSpec> {
        self.spaces.spec()
    }

    pub fn depth(&self) -> usize {
        self.spec().len()
    }

    /// Allocated nodes, pruned ones included; every `NodeId` is below this.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub fn component(&self, id: NodeId) -> Option<&ComponentVersion> {
        let n = &self.nodes[id];
        n.slot.map(|s| &self.spaces.versions(s)[n.choice])
    }

    /// Nodes from the first level down to `id`.
    pub fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.depth());
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(cur);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Versions bound along the path to `leaf`, in spec slot order.
    pub fn bindings(&self, leaf: NodeId) -> Vec<ComponentVersion> {
        let mut out: Vec<Option<ComponentVersion>> = vec![None; self.depth()];
        for n in self.path(leaf) {
            out[self.nodes[n].slot.expect("non-root")] = self.component(n).cloned();
        }
        out.into_iter().map(|c| c.expect("full-depth path")).collect()
    }

    /// Reachable nodes, depth-first pre-order (root excluded).
    pub fn reachable(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.nodes[ROOT].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }

    /// Reachable full-depth leaves in depth-first order: the candidates.
    pub fn leaves(&self) -> Vec<NodeId> {
        let d = self.depth();
        self.reachable()
            .into_iter()
            .filter(|&n| self.nodes[n].depth == d)
            .collect()
    }

    /// Reachable node count per level (index 0 = first slot).
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth()];
        for n in self.reachable() {
            counts[self.nodes[n].depth - 1] += 1;
        }
        counts
    }

    /// Whether `child`, appended below its parent's path, satisfies every
    /// pipeline edge into its slot.
    pub fn edges_allowed(&self, lut: &CompatibilityLut, child: NodeId) -> bool {
        let spec = self.spec();
        let slot = self.nodes[child].slot.expect("non-root");
        let down = self.component(child).expect("non-root");
        let mut upstream: BTreeMap<usize, NodeId> = BTreeMap::new();
        let mut cur = self.nodes[child].parent;
        while let Some(n) = cur {
            if let Some(s) = self.nodes[n].slot {
                upstream.insert(s, n);
            }
            cur = self.nodes[n].parent;
        }
        spec.predecessor_indices(slot).into_iter().all(|p| {
            upstream
                .get(&p)
                .and_then(|&n| self.component(n))
                .map(|up| lut.allows(up, down))
                .unwrap_or(false)
        })
    }

    /// Drop `node`'s children that break an edge.
    pub fn prune_children(&mut self, lut: &CompatibilityLut, node: NodeId) -> usize {
        let children = std::mem::take(&mut self.nodes[node].children);
        let before = children.len();
        let kept: Vec<NodeId> = children.into_iter().filter(|&c| self.edges_allowed(lut, c)).collect();
        let removed = before - kept.len();
        self.nodes[node].children = kept;
        removed
    }

    /// Prune the whole tree top-down; returns how many candidates were
    /// removed.
    pub fn apply_lut(&mut self, lut: &CompatibilityLut) -> usize {
        let before = self.leaves().len();
        let mut stack = vec![ROOT];
        while let Some(n) = stack.pop() {
            self.prune_children(lut, n);
            stack.extend(self.nodes[n].children.iter().copied());
        }
        before - self.leaves().len()
    }

    /// Follow `bindings` (spec order) from the root.
    pub fn find_path(&self, bindings: &[ComponentVersion]) -> Option<Vec<NodeId>> {
        let mut cur = ROOT;
        let mut path = Vec::new();
        for &slot in self.spec().topo_order() {
            let want = self.spaces.position(slot, &bindings[slot])?;
            cur = *self.nodes[cur].children.iter().find(|&&c| self.nodes[c].choice == want)?;
            path.push(cur);
        }
        Some(path)
    }

    /// Mark the paths of already-processed pipelines as executed, recording
    /// their outputs and (on leaves) their scores. Returns how many nodes
    /// were newly marked.
    pub fn mark_executed_from_history<'a>(&mut self, commits: impl IntoIterator<Item = &'a Arc<Commit>>) -> usize {
        let mut marked = 0;
        for c in commits {
            let Some(path) = self.find_path(c.pipeline.bindings()) else {
                continue;
            };
            for &n in &path {
                let slot = self.nodes[n].slot.expect("non-root");
                let name = &self.spec().slots()[slot].name;
                let Some(out) = c.outputs.get(name).copied() else {
                    break;
                };
                let node = &mut self.nodes[n];
                if !node.executed {
                    node.executed = true;
                    node.output = Some(out);
                    marked += 1;
                }
            }
            if let Some(&leaf) = path.last() {
                if self.nodes[leaf].executed && self.nodes[leaf].scores.is_none() {
                    self.nodes[leaf].scores = Some(c.scores.clone());
                }
            }
        }
        marked
    }
}
