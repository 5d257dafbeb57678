//! Small random merge instances over stub chains.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{BenchError, ChainGen, CostTable, HistoryConfig, UpdateRecord};
use crate::exec::{hash_score, ComponentRunner, Executor, MetricsLedger, ScoreFn, TimeMode};
use crate::model::MASTER;
use crate::vcs::Repository;

pub const MERGE_BRANCH: &str = "dev";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceConfig {
    pub min_slots: usize,
    pub max_slots: usize,
    /// Cap on versions per slot across both branches, ancestor included.
    pub max_versions: usize,
    /// Updates attempted per branch; at least one lands on each.
    pub max_updates: usize,
    pub p_schema_change: f64,
    pub dataset_bytes: usize,
    pub cost_ms: u64,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            min_slots: 2,
            max_slots: 4,
            max_versions: 4,
            max_updates: 4,
            p_schema_change: 0.3,
            dataset_bytes: 2048,
            cost_ms: 10,
            seed: 0,
        }
    }
}

/// A repository where `master` and [`MERGE_BRANCH`] diverge from one
/// shared commit.
pub struct MergeInstance {
    pub repo: Repository,
    pub updates: Vec<UpdateRecord>,
}

pub fn random_instance(
    cfg: &InstanceConfig,
    executor: Arc<dyn Executor>,
    time: TimeMode,
) -> Result<MergeInstance, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = rng.gen_range(cfg.min_slots.max(2)..=cfg.max_slots.max(cfg.min_slots.max(2)));
    let hcfg = HistoryConfig {
        seed: cfg.seed,
        costs: CostTable {
            dataset_ms: cfg.cost_ms,
            preproc_ms: cfg.cost_ms,
            model_ms: cfg.cost_ms,
        },
        preproc_slots: n - 2,
        dataset_bytes: cfg.dataset_bytes,
        model_bytes: 256,
        preproc_bytes: 64,
        ..HistoryConfig::default()
    };
    let mut gen = ChainGen::new(MASTER, n - 2, &hcfg);
    let mut repo = Repository::in_memory(gen.spec());
    let runner = ComponentRunner::new(repo.store().clone(), executor, time);
    let ledger = MetricsLedger::new();
    repo.commit_payloads(MASTER, &gen.all_payloads(MASTER)?, &runner, &ledger)?;
    repo.create_branch(MERGE_BRANCH, None)?;
    gen.fork_branch(MASTER, MERGE_BRANCH)?;

    let mut versions = vec![1usize; n];
    let mut updates = Vec::new();
    for branch in [MERGE_BRANCH, MASTER] {
        let attempts = rng.gen_range(1..=cfg.max_updates.max(1));
        let mut landed = 0;
        let mut tries = 0;
        while (landed < attempts || landed == 0) && tries < 64 {
            tries += 1;
            let slot = rng.gen_range(0..n);
            let schema_change = slot < n - 1 && rng.gen_bool(cfg.p_schema_change);
            let reach = if schema_change { n } else { slot + 1 };
            if (slot..reach).any(|j| versions[j] >= cfg.max_versions) {
                continue;
            }
            let payloads = gen.update(branch, slot, schema_change)?;
            for (name, _) in &payloads {
                let j = gen.slot_names().iter().position(|s| s == name).expect("known slot");
                versions[j] += 1;
            }
            updates.push(UpdateRecord {
                iteration: updates.len() + 1,
                branch: branch.to_string(),
                slot: gen.slot_names()[slot].clone(),
                schema_change,
                touched: payloads.iter().map(|(s, _)| s.clone()).collect(),
            });
            repo.commit_payloads(branch, &payloads, &runner, &ledger)?;
            landed += 1;
        }
    }
    Ok(MergeInstance { repo, updates })
}

/// Scores in `[0.6, 0.9]` built from independent per-component
/// contributions, so candidates sharing components score alike.
pub fn additive_score_fn(seed: u64) -> ScoreFn {
    Arc::new(move |lineage| {
        if lineage.is_empty() {
            return 0.6;
        }
        let sum: f64 = lineage.iter().map(|c| hash_score(seed, std::slice::from_ref(c))).sum();
        0.6 + 0.3 * sum / lineage.len() as f64
    })
}
