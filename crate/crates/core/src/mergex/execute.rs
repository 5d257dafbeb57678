use std::collections::BTreeMap;

use crate::exec::{ArtifactRef, ComponentRunner, MetricsLedger, PathStep, Scores};
use crate::mergex::{CompatibilityLut, NodeId, SearchTree, ROOT};
use crate::model::ComponentVersion;

/// Outcome of evaluating one candidate pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateResult {
    pub leaf: NodeId,
    /// Spec slot order.
    pub bindings: Vec<ComponentVersion>,
    /// Scores, or the error that stopped the run.
    pub outcome: Result<Scores, String>,
    /// Slot name → output, complete only on success.
    pub outputs: BTreeMap<String, ArtifactRef>,
    /// Slots whose output was taken from an executed node.
    pub reused_slots: usize,
    /// Executor invocations spent on this candidate.
    pub invocations: usize,
    /// Cumulative pipeline time of the ledger when this candidate finished.
    pub end_time: f64,
    /// Scored from recorded history without running anything.
    pub from_history: bool,
}

impl CandidateResult {
    /// The candidate's value for `metric`; failures and missing metrics
    /// count as negative infinity.
    pub fn score(&self, metric: &str) -> f64 {
        match &self.outcome {
            Ok(s) => s.get(metric).copied().unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn labels(&self) -> Vec<String> {
        self.bindings.iter().map(|c| c.display()).collect()
    }
}

/// Evaluate the candidate ending at `leaf`, skipping executed nodes and
/// marking every node it runs. Each node runs at most once: a node that
/// failed poisons its subtree.
pub fn evaluate_leaf(
    tree: &mut SearchTree,
    leaf: NodeId,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> CandidateResult {
    let path = tree.path(leaf);
    let bindings = tree.bindings(leaf);
    let spec = tree.spec().clone();
    let mut result = CandidateResult {
        leaf,
        bindings,
        outcome: Err(String::new()),
        outputs: BTreeMap::new(),
        reused_slots: 0,
        invocations: 0,
        end_time: 0.0,
        from_history: false,
    };
    let collect_outputs = |tree: &SearchTree| -> BTreeMap<String, ArtifactRef> {
        path.iter()
            .filter_map(|&n| {
                let node = tree.node(n);
                Some((spec.slots()[node.slot?].name.clone(), node.output?))
            })
            .collect()
    };

    if let Some(&bad) = path.iter().find(|&&n| tree.node(n).failed) {
        let slot = tree.node(bad).slot.expect("non-root");
        result.outcome = Err(format!("upstream slot `{}` failed", spec.slots()[slot].name));
        result.end_time = ledger.snapshot().cpt();
        return result;
    }
    let leaf_node = tree.node(leaf);
    if leaf_node.executed {
        if let Some(scores) = &leaf_node.scores {
            result.outcome = Ok(scores.clone());
            result.outputs = collect_outputs(tree);
            result.reused_slots = path.len();
            result.from_history = true;
            result.end_time = ledger.snapshot().cpt();
            return result;
        }
    }

    let steps: Vec<PathStep> = path
        .iter()
        .map(|&n| {
            let node = tree.node(n);
            PathStep {
                slot: node.slot.expect("non-root"),
                component: tree.component(n).expect("non-root").clone(),
                reuse: if node.executed { node.output } else { None },
            }
        })
        .collect();
    result.reused_slots = steps.iter().filter(|s| s.reuse.is_some()).count();
    let outcome = runner.execute_node_list(&spec, &steps, ledger);
    for (k, r) in outcome.results.iter().enumerate() {
        if r.executed_now {
            let node = tree.node_mut(path[k]);
            node.executed = true;
            node.output = Some(r.output);
        }
    }
    result.invocations = outcome.invocations;
    match &outcome.failure {
        Some((k, err)) => {
            tree.node_mut(path[*k]).failed = true;
            result.outcome = Err(format!("slot `{}`: {err}", spec.slots()[steps[*k].slot].name));
        }
        None => {
            let scores = outcome.scores();
            tree.node_mut(leaf).scores = Some(scores.clone());
            result.outputs = collect_outputs(tree);
            result.outcome = Ok(scores);
        }
    }
    result.end_time = ledger.snapshot().cpt();
    result
}

/// Depth-first traversal with on-the-fly pruning: incompatible children
/// are removed before descending, and every surviving leaf is evaluated
/// with executed-node reuse.
pub fn execute_tree(
    tree: &mut SearchTree,
    lut: &CompatibilityLut,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Vec<CandidateResult> {
    let depth = tree.depth();
    let mut results = Vec::new();
    let mut stack = vec![ROOT];
    while let Some(n) = stack.pop() {
        if tree.node(n).depth == depth {
            results.push(evaluate_leaf(tree, n, runner, ledger));
            continue;
        }
        tree.prune_children(lut, n);
        stack.extend(tree.node(n).children.iter().rev().copied());
    }
    results
}

/// Evaluate each leaf independently from scratch, with no reuse between
/// candidates or from history. Incompatible candidates run until the
/// runner rejects an input.
pub fn run_from_scratch(
    tree: &SearchTree,
    leaves: &[NodeId],
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Vec<CandidateResult> {
    leaves
        .iter()
        .map(|&leaf| {
            let mut fresh = tree.clone();
            for n in fresh.path(leaf) {
                let node = fresh.node_mut(n);
                node.executed = false;
                node.failed = false;
                node.output = None;
                node.scores = None;
            }
            evaluate_leaf(&mut fresh, leaf, runner, ledger)
        })
        .collect()
}
