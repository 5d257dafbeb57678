use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::exec::{
    ArtifactRef, ComponentRunner, Executor, LedgerSnapshot, MetricsLedger, RunStats, TimeMode,
};
use crate::mergex::{
    count_candidates_upper, execute_tree, run_from_scratch, CandidateResult, CompatibilityLut,
    MergeError, SearchSpace, SearchTree,
};
use crate::model::{ComponentVersion, PipelineVersion};
use crate::store::{ObjectKind, Store, StoreMode};
use crate::vcs::{Commit, CommitId, PipelineRun, Repository};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Latest version of every slot, no search.
    Naive,
    /// Every combination, each run from scratch until it fails.
    Full,
    /// Compatible combinations only, each run from scratch.
    Pc,
    /// Compatible combinations, executed nodes and history reused.
    Pcpr,
}

impl Strategy {
    pub const SEARCHING: [Strategy; 3] = [Strategy::Full, Strategy::Pc, Strategy::Pcpr];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Full => "full",
            Strategy::Pc => "pc",
            Strategy::Pcpr => "pcpr",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = MergeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "full" => Ok(Strategy::Full),
            "pc" => Ok(Strategy::Pc),
            "pcpr" => Ok(Strategy::Pcpr),
            other => Err(MergeError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Everything a merge needs from the repository, gathered up front.
#[derive(Clone, Debug)]
pub struct MergeSession {
    pub head_branch: String,
    pub merge_branch: String,
    pub head: CommitId,
    pub merge_head: CommitId,
    pub ancestor: CommitId,
    /// Commits from the common ancestor to either head, oldest first.
    pub history: Vec<Arc<Commit>>,
    pub spaces: SearchSpace,
    pub ancestor_bindings: Vec<ComponentVersion>,
}

impl MergeSession {
    pub fn prepare(repo: &Repository, head_branch: &str, merge_branch: &str) -> Result<Self, MergeError> {
        let head = repo.head_commit(head_branch)?.id;
        let merge_head = repo.head_commit(merge_branch)?.id;
        let ancestor = repo.common_ancestor(&head, &merge_head)?;
        let mut history = repo.commits_between(&ancestor, &head)?;
        for c in repo.commits_between(&ancestor, &merge_head)? {
            if !history.iter().any(|h| h.id == c.id) {
                history.push(c);
            }
        }
        history.sort_by_key(|c| c.sequence);
        let spaces = SearchSpace::from_commits(repo.spec().clone(), &history);
        let ancestor_bindings = repo.commit(&ancestor)?.pipeline.bindings().to_vec();
        Ok(MergeSession {
            head_branch: head_branch.to_string(),
            merge_branch: merge_branch.to_string(),
            head,
            merge_head,
            ancestor,
            history,
            spaces,
            ancestor_bindings,
        })
    }

    pub fn tree(&self) -> Result<SearchTree, MergeError> {
        SearchTree::build(self.spaces.clone())
    }

    pub fn lut(&self) -> CompatibilityLut {
        CompatibilityLut::build(&self.spaces)
    }

    /// Slots whose binding differs from the common ancestor's.
    pub fn changed_slots(&self, bindings: &[ComponentVersion]) -> usize {
        bindings
            .iter()
            .zip(&self.ancestor_bindings)
            .filter(|(a, b)| a.id() != b.id())
            .count()
    }
}

/// Candidates evaluated by one searching strategy.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub tree: SearchTree,
    pub results: Vec<CandidateResult>,
    pub candidates_after_pruning: usize,
    pub nodes_marked_from_history: usize,
}

/// Evaluate the candidates `strategy` considers. `Naive` evaluates nothing.
pub fn evaluate(
    session: &MergeSession,
    strategy: Strategy,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<Evaluation, MergeError> {
    let mut tree = session.tree()?;
    let lut = session.lut();
    let (results, after, marked) = match strategy {
        Strategy::Naive => (Vec::new(), 0, 0),
        Strategy::Pcpr => {
            let marked = tree.mark_executed_from_history(&session.history);
            let results = execute_tree(&mut tree, &lut, runner, ledger);
            let n = results.len();
            (results, n, marked)
        }
        Strategy::Pc => {
            tree.apply_lut(&lut);
            let leaves = tree.leaves();
            (run_from_scratch(&tree, &leaves, runner, ledger), leaves.len(), 0)
        }
        Strategy::Full => {
            let leaves = tree.leaves();
            let mut pruned = tree.clone();
            pruned.apply_lut(&lut);
            let after = pruned.leaves().len();
            (run_from_scratch(&tree, &leaves, runner, ledger), after, 0)
        }
    };
    Ok(Evaluation {
        tree,
        results,
        candidates_after_pruning: after,
        nodes_marked_from_history: marked,
    })
}

/// Compare two candidates for the merge: higher score, then fewer slots
/// changed from the ancestor, then the smaller version tuple.
pub fn compare_candidates(session: &MergeSession, metric: &str, a: &CandidateResult, b: &CandidateResult) -> Ordering {
    let (sa, sb) = (a.score(metric), b.score(metric));
    sa.partial_cmp(&sb)
        .unwrap_or(Ordering::Equal)
        .then_with(|| session.changed_slots(&b.bindings).cmp(&session.changed_slots(&a.bindings)))
        .then_with(|| {
            let ta: Vec<_> = a.bindings.iter().map(|c| &c.version).collect();
            let tb: Vec<_> = b.bindings.iter().map(|c| &c.version).collect();
            tb.cmp(&ta)
        })
}

/// Index of the best candidate with a finite score.
pub fn select_winner(session: &MergeSession, metric: &str, results: &[CandidateResult]) -> Option<usize> {
    results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.score(metric).is_finite())
        .max_by(|(_, a), (_, b)| compare_candidates(session, metric, a, b))
        .map(|(i, _)| i)
}

#[derive(Clone, Debug)]
pub struct MergeOptions {
    pub metric: String,
    pub strategy: Strategy,
    pub time: TimeMode,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions {
            metric: crate::exec::DEFAULT_METRIC.to_string(),
            strategy: Strategy::Pcpr,
            time: TimeMode::DEFAULT_VIRTUAL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MergeReport {
    pub strategy: Strategy,
    pub metric: String,
    pub winner: Vec<ComponentVersion>,
    pub winner_score: f64,
    /// Search-space size per slot, spec order.
    pub space_sizes: Vec<usize>,
    pub candidates_total: u64,
    pub candidates_after_pruning: usize,
    pub nodes_marked_from_history: usize,
    /// Executor invocations made by the merge.
    pub invocations: u64,
    pub candidates: Vec<CandidateResult>,
    pub ledger: LedgerSnapshot,
    pub commit: Option<CommitId>,
}

fn bindings_field(spec: &crate::model::PipelineSpec, bindings: &[ComponentVersion]) -> String {
    spec.slots()
        .iter()
        .zip(bindings)
        .map(|(s, c)| format!("{}={}", s.name, c.version))
        .collect::<Vec<_>>()
        .join(";")
}

impl MergeReport {
    /// One row per candidate, a blank line, then a one-row summary.
    pub fn to_csv(&self, spec: &crate::model::PipelineSpec) -> String {
        let mut out = String::from("candidate,bindings,score,reused_slots,wall_ms\n");
        let mut prev = 0.0;
        for (i, c) in self.candidates.iter().enumerate() {
            let ms = (c.end_time - prev).max(0.0) * 1000.0;
            prev = c.end_time;
            out.push_str(&format!(
                "{i},{},{},{},{ms:.3}\n",
                bindings_field(spec, &c.bindings),
                c.score(&self.metric),
                c.reused_slots
            ));
        }
        out.push_str(
            "\nstrategy,metric,winner,score,candidates_total,candidates_after_pruning,invocations,cet_s,cst_s,cpt_s,css_bytes\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{}\n",
            self.strategy,
            self.metric,
            bindings_field(spec, &self.winner),
            self.winner_score,
            self.candidates_total,
            self.candidates_after_pruning,
            self.invocations,
            self.ledger.cet,
            self.ledger.cst,
            self.ledger.cpt(),
            self.ledger.css
        ));
        out
    }
}

/// Archive the winner's outputs in the repository store (copying from
/// `scratch` when candidates ran elsewhere) and commit the merge.
pub fn commit_winner(
    repo: &mut Repository,
    session: &MergeSession,
    winner: &CandidateResult,
    scratch: Option<&Store>,
    ledger: &MetricsLedger,
    time: TimeMode,
) -> Result<Arc<Commit>, MergeError> {
    let mut outputs = winner.outputs.clone();
    if let Some(scratch) = scratch {
        for out in outputs.values_mut() {
            let bytes = scratch.get(&out.object)?;
            let before = repo.store().stats().physical_bytes;
            let m = repo.store().put_bytes(&bytes, ObjectKind::Output)?;
            let delta = repo.store().stats().physical_bytes - before;
            ledger.add_storage(time.storage_seconds(bytes.len() as u64, 0.0), delta);
            *out = ArtifactRef {
                object: m.id,
                schema: out.schema,
            };
        }
    }
    let snap = ledger.snapshot();
    let run = PipelineRun {
        outputs,
        scores: winner.outcome.clone().unwrap_or_default(),
        stats: RunStats {
            execution_time: snap.cet,
            storage_time: snap.cst,
            storage_bytes_delta: snap.css,
        },
        executed: Vec::new(),
    };
    let pipeline = PipelineVersion::from_ordered(repo.spec().clone(), winner.bindings.clone())?;
    Ok(repo.commit_merge(&session.head_branch, session.merge_head, pipeline, &run)?)
}

/// Merge `merge_branch` into `head_branch` by evaluating candidates with
/// the chosen strategy and committing the best one.
pub fn metric_merge(
    repo: &mut Repository,
    head_branch: &str,
    merge_branch: &str,
    opts: &MergeOptions,
    executor: Arc<dyn Executor>,
) -> Result<(Arc<Commit>, MergeReport), MergeError> {
    let session = MergeSession::prepare(repo, head_branch, merge_branch)?;
    let sizes = session.spaces.sizes();
    let ledger = MetricsLedger::new();
    let spec = repo.spec().clone();

    if opts.strategy == Strategy::Naive {
        let latest: Vec<ComponentVersion> = (0..spec.len())
            .map(|i| session.spaces.versions(i).last().expect("non-empty space").clone())
            .collect();
        let pipeline = PipelineVersion::from_ordered(spec.clone(), latest.clone())?;
        pipeline.check_compatibility().map_err(crate::vcs::VcsError::from)?;
        let runner = ComponentRunner::new(repo.store().clone(), executor, opts.time);
        let run = repo.run_pipeline(&pipeline, &runner, &ledger, true)?;
        let score = run.scores.get(&opts.metric).copied().unwrap_or(f64::NEG_INFINITY);
        let reused = spec.len() - run.executed.len();
        let result = CandidateResult {
            leaf: 0,
            bindings: latest.clone(),
            outcome: Ok(run.scores.clone()),
            outputs: run.outputs.clone(),
            reused_slots: reused,
            invocations: run.executed.len(),
            end_time: ledger.snapshot().cpt(),
            from_history: run.executed.is_empty(),
        };
        let commit = commit_winner(repo, &session, &result, None, &ledger, opts.time)?;
        let report = MergeReport {
            strategy: opts.strategy,
            metric: opts.metric.clone(),
            winner: latest,
            winner_score: score,
            candidates_total: count_candidates_upper(&sizes),
            space_sizes: sizes,
            candidates_after_pruning: 1,
            nodes_marked_from_history: 0,
            invocations: runner.invocations(),
            candidates: vec![result],
            ledger: ledger.snapshot(),
            commit: Some(commit.id),
        };
        return Ok((commit, report));
    }

    let scratch = match opts.strategy {
        Strategy::Pcpr => None,
        _ => Some(Arc::new(Store::in_memory(StoreMode::Folder))),
    };
    let runner = match &scratch {
        None => ComponentRunner::new(repo.store().clone(), executor, opts.time),
        Some(s) => ComponentRunner::with_stores(repo.store().clone(), s.clone(), executor, opts.time),
    };
    let eval = evaluate(&session, opts.strategy, &runner, &ledger)?;
    let idx = select_winner(&session, &opts.metric, &eval.results).ok_or(MergeError::NotMergeable)?;
    let winner = eval.results[idx].clone();
    let commit = commit_winner(repo, &session, &winner, scratch.as_deref(), &ledger, opts.time)?;
    let report = MergeReport {
        strategy: opts.strategy,
        metric: opts.metric.clone(),
        winner_score: winner.score(&opts.metric),
        winner: winner.bindings,
        candidates_total: count_candidates_upper(&sizes),
        space_sizes: sizes,
        candidates_after_pruning: eval.candidates_after_pruning,
        nodes_marked_from_history: eval.nodes_marked_from_history,
        invocations: runner.invocations(),
        candidates: eval.results,
        ledger: ledger.snapshot(),
        commit: Some(commit.id),
    };
    Ok((commit, report))
}
