//! Prioritized pipeline search over a scored search tree, the random-order
//! baseline, budgeted merges and the multi-trial harness.

mod run;
mod state;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use run::{run_search, run_trials, Budget, PositionStats, SearchMethod, SearchStep, TrialResult, TrialSetup};
pub use state::{prioritized_next, ScoreState};

use crate::exec::{ComponentRunner, Executor, MetricsLedger};
use crate::mergex::{commit_winner, count_candidates_upper, MergeError, MergeOptions, MergeReport, MergeSession};
use crate::vcs::{Commit, Repository};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("every candidate has been visited")]
    Exhausted,
    #[error("a recorded pipeline has no `{0}` score")]
    MissingMetric(String),
    #[error("unknown search method `{0}` (expected prioritized or random)")]
    UnknownMethod(String),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

#[allow(clippy::too_many_arguments)]
/// Merge with reuse, visiting candidates in `method`'s order until
/// `budget` runs out, then committing the best candidate seen. Candidates
/// already scored in history count as seen.
pub fn budgeted_merge(
    repo: &mut Repository,
    head_branch: &str,
    merge_branch: &str,
    opts: &MergeOptions,
    method: SearchMethod,
    budget: Budget,
    seed: u64,
    executor: Arc<dyn Executor>,
) -> Result<(Arc<Commit>, MergeReport), SearchError> {
    let session = MergeSession::prepare(repo, head_branch, merge_branch)?;
    let mut tree = session.tree()?;
    let lut = session.lut();
    tree.apply_lut(&lut);
    let marked = tree.mark_executed_from_history(&session.history);
    let after = tree.leaves().len();
    let runner = ComponentRunner::new(repo.store().clone(), executor, opts.time);
    let ledger = MetricsLedger::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = run_search(&mut tree, &opts.metric, method, budget, &mut rng, &runner, &ledger)?;
    let mut results: Vec<_> = steps.into_iter().map(|s| s.result).collect();
    for leaf in tree.leaves() {
        if results.iter().all(|r| r.leaf != leaf) && tree.node(leaf).scores.is_some() {
            results.push(crate::mergex::evaluate_leaf(&mut tree, leaf, &runner, &ledger));
        }
    }
    let idx = crate::mergex::select_winner(&session, &opts.metric, &results).ok_or(MergeError::NotMergeable)?;
    let winner = results[idx].clone();
    let commit = commit_winner(repo, &session, &winner, None, &ledger, opts.time)?;
    let sizes = session.spaces.sizes();
    let report = MergeReport {
        strategy: opts.strategy,
        metric: opts.metric.clone(),
        winner_score: winner.score(&opts.metric),
        winner: winner.bindings,
        candidates_total: count_candidates_upper(&sizes),
        space_sizes: sizes,
        candidates_after_pruning: after,
        nodes_marked_from_history: marked,
        invocations: runner.invocations(),
        candidates: results,
        ledger: ledger.snapshot(),
        commit: Some(commit.id),
    };
    Ok((commit, report))
}
