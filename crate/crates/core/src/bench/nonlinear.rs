use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{generate_history, BenchError, ChainGen, CurvePoint, HistoryConfig, UpdateRecord};
use crate::exec::{ComponentRunner, Executor, MetricsLedger, TimeMode};
use crate::mergex::{metric_merge, MergeOptions, MergeReport, Strategy};
use crate::model::MASTER;
use crate::vcs::Repository;

pub const MERGE_BRANCH: &str = "dev";

#[derive(Clone, Debug)]
pub struct NonlinearReport {
    pub updates: Vec<UpdateRecord>,
    /// One report per searching strategy, in [`Strategy::SEARCHING`] order.
    pub merges: Vec<MergeReport>,
}

impl NonlinearReport {
    /// One point per strategy with its merge's cumulative metrics; the
    /// iteration column holds the number of candidates evaluated.
    pub fn points(&self) -> Vec<CurvePoint> {
        self.merges
            .iter()
            .map(|r| CurvePoint {
                system: r.strategy.to_string(),
                iteration: r.candidates.len(),
                cet: r.ledger.cet,
                cst: r.ledger.cst,
                css: r.ledger.css,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        crate::bench::curves_csv(&self.points())
    }
}

/// Build a two-branch history from `cfg` (`head_updates` on master and
/// `merge_updates` on a second branch after a shared initial commit), then
/// merge it once per searching strategy, each on its own copy of the
/// repository.
pub fn build_two_branch(
    cfg: &HistoryConfig,
    executor: Arc<dyn Executor>,
    time: TimeMode,
) -> Result<(Repository, Vec<UpdateRecord>), BenchError> {
    cfg.validate()?;
    let mut gen = ChainGen::new(MASTER, cfg.preproc_slots, cfg);
    let mut repo = Repository::in_memory(gen.spec());
    let runner = ComponentRunner::new(repo.store().clone(), executor, time);
    let ledger = MetricsLedger::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    repo.commit_payloads(MASTER, &gen.all_payloads(MASTER)?, &runner, &ledger)?;
    repo.create_branch(MERGE_BRANCH, None)?;
    gen.fork_branch(MASTER, MERGE_BRANCH)?;
    let (_, mut log) = generate_history(
        &mut repo,
        &mut gen,
        MERGE_BRANCH,
        cfg.merge_updates,
        cfg,
        &mut rng,
        &runner,
        &ledger,
    )?;
    let (_, head_log) = generate_history(&mut repo, &mut gen, MASTER, cfg.head_updates, cfg, &mut rng, &runner, &ledger)?;
    log.extend(head_log);
    Ok((repo, log))
}

pub fn nonlinear_experiment(
    cfg: &HistoryConfig,
    metric: &str,
    executor: Arc<dyn Executor>,
    time: TimeMode,
) -> Result<NonlinearReport, BenchError> {
    let (repo, updates) = build_two_branch(cfg, executor.clone(), time)?;
    let mut merges = Vec::new();
    for strategy in Strategy::SEARCHING {
        let mut copy = repo.fork()?;
        let opts = MergeOptions {
            metric: metric.to_string(),
            strategy,
            time,
        };
        let (_, report) = metric_merge(&mut copy, MASTER, MERGE_BRANCH, &opts, executor.clone())?;
        merges.push(report);
    }
    Ok(NonlinearReport { updates, merges })
}
