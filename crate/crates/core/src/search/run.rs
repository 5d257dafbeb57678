use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::{ComponentRunner, Executor, MetricsLedger, TimeMode};
use crate::mergex::{evaluate_leaf, CandidateResult, NodeId, SearchTree};
use crate::search::{prioritized_next, ScoreState, SearchError};
use crate::store::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMethod {
    Prioritized,
    Random,
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMethod::Prioritized => "prioritized",
            SearchMethod::Random => "random",
        })
    }
}

impl FromStr for SearchMethod {
    type Err = SearchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prioritized" => Ok(SearchMethod::Prioritized),
            "random" => Ok(SearchMethod::Random),
            other => Err(SearchError::UnknownMethod(other.to_string())),
        }
    }
}

/// When to stop a search early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Unlimited,
    /// Number of candidates to visit.
    Candidates(usize),
    /// Stop once the ledger's pipeline time reaches this many seconds.
    Seconds(f64),
}

/// One visited candidate, in visiting order.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchStep {
    pub leaf: NodeId,
    pub score: f64,
    /// Ledger pipeline time when the candidate finished.
    pub end_time: f64,
    pub result: CandidateResult,
}

/// Visit candidates of a pruned, history-marked tree in `method`'s order,
/// re-averaging scores after each one.
pub fn run_search(
    tree: &mut SearchTree,
    metric: &str,
    method: SearchMethod,
    budget: Budget,
    rng: &mut ChaCha8Rng,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<Vec<SearchStep>, SearchError> {
    let mut state = ScoreState::seed(tree, metric)?;
    let mut order = tree.leaves();
    if method == SearchMethod::Random {
        order.shuffle(rng);
    }
    let total = order.len();
    let mut steps = Vec::with_capacity(total);
    while steps.len() < total {
        match budget {
            Budget::Candidates(n) if steps.len() >= n => break,
            Budget::Seconds(s) if ledger.snapshot().cpt() >= s => break,
            _ => {}
        }
        let leaf = match method {
            SearchMethod::Prioritized => prioritized_next(tree, &state)?,
            SearchMethod::Random => order[steps.len()],
        };
        let result = evaluate_leaf(tree, leaf, runner, ledger);
        let score = result.score(metric);
        state.set_leaf(tree, leaf, score);
        state.mark_visited(tree, leaf);
        steps.push(SearchStep {
            leaf,
            score,
            end_time: result.end_time,
            result,
        });
    }
    Ok(steps)
}

/// What each trial starts from: a pruned, history-marked tree and the
/// means to run its nodes.
#[derive(Clone)]
pub struct TrialSetup {
    pub tree: SearchTree,
    pub store: Arc<Store>,
    pub executor: Arc<dyn Executor>,
    pub time: TimeMode,
    pub metric: String,
}

/// Statistics of the `k`-th visited candidate across trials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionStats {
    pub avg_end_time: f64,
    pub avg_score: f64,
    pub score_variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub method: SearchMethod,
    pub trials: usize,
    pub seed: u64,
    /// Indexed by visiting position.
    pub positions: Vec<PositionStats>,
}

impl TrialResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate_id,method,avg_end_time_s,avg_score,score_variance\n");
        for (i, p) in self.positions.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{:.6},{:.6},{:.6}\n",
                self.method, p.avg_end_time, p.avg_score, p.score_variance
            ));
        }
        out
    }

    pub fn mean_score(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.positions[range];
        slice.iter().map(|p| p.avg_score).sum::<f64>() / slice.len() as f64
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Run `trials` full searches from the same starting point. Trial `t`
/// draws from stream `t` of a ChaCha8 generator seeded with `seed`, so
/// results do not depend on scheduling.
pub fn run_trials(setup: &TrialSetup, method: SearchMethod, trials: usize, seed: u64) -> Result<TrialResult, SearchError> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).clamp(1, 8);
    let mut per_trial: Vec<Option<Result<Vec<SearchStep>, SearchError>>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in per_trial.chunks_mut(trials.div_ceil(workers).max(1)).enumerate() {
            let base = w * trials.div_ceil(workers).max(1);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let mut tree = setup.tree.clone();
                    let runner = ComponentRunner::new(setup.store.clone(), setup.executor.clone(), setup.time);
                    let ledger = MetricsLedger::new();
                    let mut rng = trial_rng(seed, base + k);
                    *slot = Some(run_search(
                        &mut tree,
                        &setup.metric,
                        method,
                        Budget::Unlimited,
                        &mut rng,
                        &runner,
                        &ledger,
                    ));
                }
            });
        }
    });
    let runs = per_trial
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let n = runs.first().map(Vec::len).unwrap_or(0);
    let positions = (0..n)
        .map(|k| {
            let scores: Vec<f64> = runs.iter().map(|r| r[k].score).collect();
            let mean = scores.iter().sum::<f64>() / trials as f64;
            PositionStats {
                avg_end_time: runs.iter().map(|r| r[k].end_time).sum::<f64>() / trials as f64,
                avg_score: mean,
                score_variance: scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / trials as f64,
            }
        })
        .collect();
    Ok(TrialResult {
        method,
        trials,
        seed,
        positions,
    })
}
