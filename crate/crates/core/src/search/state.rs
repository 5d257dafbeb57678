use crate::mergex::{NodeId, SearchTree, ROOT};
use crate::search::SearchError;

/// Per-node scores and unvisited-leaf counts over a pruned search tree.
///
/// A leaf's score is its candidate's metric; an internal node's score is
/// the mean of its scored children. Non-finite leaf scores (failed
/// candidates) mark the leaf as scored but stay out of the averages.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreState {
    score: Vec<Option<f64>>,
    unvisited: Vec<usize>,
    visited: Vec<bool>,
}

impl ScoreState {
    /// All reachable leaves unvisited, nothing scored.
    pub fn new(tree: &SearchTree) -> Self {
        let n = tree.arena_len();
        let mut state = ScoreState {
            score: vec![None; n],
            unvisited: vec![0; n],
            visited: vec![false; n],
        };
        for leaf in tree.leaves() {
            state.unvisited[leaf] = 1;
            let mut cur = tree.node(leaf).parent;
            while let Some(p) = cur {
                state.unvisited[p] += 1;
                cur = tree.node(p).parent;
            }
        }
        state
    }

    /// Seed leaf scores and recompute every internal score.
    pub fn with_leaf_scores(tree: &SearchTree, scores: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        let mut state = Self::new(tree);
        for (leaf, s) in scores {
            state.score[leaf] = Some(s);
        }
        state.recompute_all(tree);
        state
    }

    /// Scores recorded on executed leaves (from history) under `metric`.
    pub fn seed(tree: &SearchTree, metric: &str) -> Result<Self, SearchError> {
        let mut seeds = Vec::new();
        for leaf in tree.leaves() {
            let node = tree.node(leaf);
            if let (true, Some(scores)) = (node.executed, &node.scores) {
                let s = scores
                    .get(metric)
                    .ok_or_else(|| SearchError::MissingMetric(metric.to_string()))?;
                seeds.push((leaf, *s));
            }
        }
        Ok(Self::with_leaf_scores(tree, seeds))
    }

    pub fn score(&self, node: NodeId) -> Option<f64> {
        self.score[node]
    }

    pub fn unvisited(&self, node: NodeId) -> usize {
        self.unvisited[node]
    }

    pub fn is_visited(&self, leaf: NodeId) -> bool {
        self.visited[leaf]
    }

    fn mean_of_children(&self, tree: &SearchTree, node: NodeId) -> Option<f64> {
        let vals: Vec<f64> = tree
            .node(node)
            .children
            .iter()
            .filter_map(|&c| self.score[c])
            .filter(|s| s.is_finite())
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    fn recompute_all(&mut self, tree: &SearchTree) {
        let mut order = tree.reachable();
        order.insert(0, ROOT);
        let depth = tree.depth();
        for &n in order.iter().rev() {
            if tree.node(n).depth < depth {
                self.score[n] = self.mean_of_children(tree, n);
            }
        }
    }

    /// Record a leaf's score and re-average its ancestors.
    pub fn set_leaf(&mut self, tree: &SearchTree, leaf: NodeId, score: f64) {
        self.score[leaf] = Some(score);
        let mut cur = tree.node(leaf).parent;
        while let Some(p) = cur {
            self.score[p] = self.mean_of_children(tree, p);
            cur = tree.node(p).parent;
        }
    }

    pub fn mark_visited(&mut self, tree: &SearchTree, leaf: NodeId) {
        if std::mem::replace(&mut self.visited[leaf], true) {
            return;
        }
        self.unvisited[leaf] -= 1;
        let mut cur = tree.node(leaf).parent;
        while let Some(p) = cur {
            self.unvisited[p] -= 1;
            cur = tree.node(p).parent;
        }
    }
}

/// Greedy descent: at each level take the best-scored child that still
/// has an unvisited leaf below it. Unscored children rank below scored
/// ones; ties go to the earlier (lower) version.
pub fn prioritized_next(tree: &SearchTree, state: &ScoreState) -> Result<NodeId, SearchError> {
    if state.unvisited(ROOT) == 0 {
        return Err(SearchError::Exhausted);
    }
    let mut cur = ROOT;
    while tree.node(cur).depth < tree.depth() {
        let mut best: Option<(NodeId, Option<f64>)> = None;
        for &c in &tree.node(cur).children {
            if state.unvisited(c) == 0 {
                continue;
            }
            let s = state.score(c).filter(|s| !s.is_nan());
            let better = match (&best, s) {
                (None, _) => true,
                (Some((_, None)), Some(_)) => true,
                (Some((_, Some(b))), Some(x)) => x > *b,
                _ => false,
            };
            if better {
                best = Some((c, s));
            }
        }
        cur = best.expect("unvisited count is consistent").0;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mergex::SearchSpace;
    use crate::model::{ComponentKind, ComponentVersion, InputSchema, PipelineSpec, SemanticVersion, Slot};
    use crate::Digest;
    use std::sync::Arc;

    fn tree(sizes: &[usize]) -> SearchTree {
        let slots: Vec<Slot> = (0..sizes.len())
            .map(|i| Slot {
                name: format!("s{i}"),
                kind: if i == 0 { ComponentKind::Dataset } else { ComponentKind::Library },
            })
            .collect();
        let spec = Arc::new(PipelineSpec::chain("t", slots.clone()).unwrap());
        let spaces = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                (0..n)
                    .map(|v| ComponentVersion {
                        name: format!("s{i}"),
                        kind: slots[i].kind,
                        version: SemanticVersion {
                            branch: "master".into(),
                            schema_ordinal: 0,
                            increment: v as u32,
                            schema_digest: Digest::ZERO,
                        },
                        payload: Digest::of(format!("{i}/{v}").as_bytes()),
                        input_schema: InputSchema::Any,
                        output_schema: Digest::ZERO,
                        schema_changed: false,
                    })
                    .collect()
            })
            .collect();
        SearchTree::build(SearchSpace::new(spec, spaces)).unwrap()
    }

    #[test]
    fn parent_averages_scored_children() {
        let t = tree(&[1, 3]);
        let leaves = t.leaves();
        let s = ScoreState::with_leaf_scores(&t, [(leaves[0], 2.0), (leaves[1], 4.0)]);
        let parent = t.node(leaves[0]).parent.unwrap();
        assert_eq!(s.score(parent), Some(3.0));
        assert_eq!(s.score(ROOT), Some(3.0));
        assert_eq!(s.score(leaves[2]), None);
    }

    #[test]
    fn single_seed_propagates_to_root() {
        let t = tree(&[2, 2]);
        let leaf = t.leaves()[3];
        let s = ScoreState::with_leaf_scores(&t, [(leaf, 0.7)]);
        for n in t.path(leaf) {
            assert_eq!(s.score(n), Some(0.7));
        }
        assert_eq!(s.score(ROOT), Some(0.7));
    }

    #[test]
    fn descends_into_best_unvisited_subtree() {
        let t = tree(&[2, 2]);
        let l = t.leaves();
        let mut s = ScoreState::with_leaf_scores(&t, [(l[0], 3.0), (l[2], 5.0)]);
        assert_eq!(prioritized_next(&t, &s).unwrap(), l[2]);
        s.mark_visited(&t, l[2]);
        assert_eq!(prioritized_next(&t, &s).unwrap(), l[3]);
        s.mark_visited(&t, l[3]);
        assert_eq!(prioritized_next(&t, &s).unwrap(), l[0]);
        s.mark_visited(&t, l[0]);
        s.mark_visited(&t, l[1]);
        assert!(matches!(prioritized_next(&t, &s), Err(SearchError::Exhausted)));
    }

    #[test]
    fn unscored_ranks_below_scored() {
        let t = tree(&[3]);
        let l = t.leaves();
        let s = ScoreState::with_leaf_scores(&t, [(l[2], -10.0)]);
        assert_eq!(prioritized_next(&t, &s).unwrap(), l[2]);
        let none = ScoreState::new(&t);
        assert_eq!(prioritized_next(&t, &none).unwrap(), l[0]);
    }
}
