use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{sample_update, BenchError, ChainGen, HistoryConfig, UpdateRecord};
use crate::bundle::Bundle;
use crate::exec::{ComponentRunner, Executor, MetricsLedger, TimeMode};
use crate::model::MASTER;
use crate::store::{ObjectKind, Store, StoreMode};
use crate::vcs::{run_pipeline, Repository};

pub const BASELINE: &str = "baseline";
pub const VERSIONED: &str = "pipevc";

/// Cumulative metrics of one system after one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub system: String,
    pub iteration: usize,
    pub cet: f64,
    pub cst: f64,
    pub css: u64,
}

impl CurvePoint {
    pub fn cpt(&self) -> f64 {
        self.cet + self.cst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearReport {
    /// Iteration 0 is the initial pipeline; both systems interleaved.
    pub points: Vec<CurvePoint>,
    pub updates: Vec<UpdateRecord>,
    /// Components run per iteration by the versioned system.
    pub executed: Vec<u64>,
    /// Components run per iteration by the baseline.
    pub baseline_executed: Vec<u64>,
}

impl LinearReport {
    pub fn series(&self, system: &str) -> Vec<&CurvePoint> {
        self.points.iter().filter(|p| p.system == system).collect()
    }

    pub fn to_csv(&self) -> String {
        crate::bench::curves_csv(&self.points)
    }
}

fn archive(store: &Store, bundle: &Bundle, ledger: &MetricsLedger, time: TimeMode) -> Result<(), BenchError> {
    let start = Instant::now();
    let bytes = bundle.encode();
    let before = store.stats().physical_bytes;
    store.put_bytes(&bytes, ObjectKind::Payload)?;
    let delta = store.stats().physical_bytes - before;
    ledger.add_storage(time.storage_seconds(bytes.len() as u64, start.elapsed().as_secs_f64()), delta);
    Ok(())
}

fn point(system: &str, iteration: usize, ledger: &MetricsLedger) -> CurvePoint {
    let s = ledger.snapshot();
    CurvePoint {
        system: system.to_string(),
        iteration,
        cet: s.cet,
        cst: s.cst,
        css: s.css,
    }
}

/// Replay one sampled history twice: once versioned (changed payloads
/// archived in a deduplicating store, unchanged lineages reused) and once
/// as the baseline (every payload archived to a fresh folder and every slot
/// re-run each iteration).
pub fn linear_experiment(
    cfg: &HistoryConfig,
    executor: Arc<dyn Executor>,
    time: TimeMode,
) -> Result<LinearReport, BenchError> {
    cfg.validate()?;
    let mut gen = ChainGen::new(MASTER, cfg.preproc_slots, cfg);
    let mut repo = Repository::in_memory(gen.spec());
    let runner = ComponentRunner::new(repo.store().clone(), executor.clone(), time);
    let ledger = MetricsLedger::new();
    let folder = Arc::new(Store::in_memory(StoreMode::Folder));
    let base_runner = ComponentRunner::with_stores(folder.clone(), folder.clone(), executor, time);
    let base_ledger = MetricsLedger::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut report = LinearReport {
        points: Vec::new(),
        updates: Vec::new(),
        executed: Vec::new(),
        baseline_executed: Vec::new(),
    };
    for iteration in 0..=cfg.iterations {
        let payloads = if iteration == 0 {
            gen.all_payloads(MASTER)?
        } else {
            let (slot, schema_change) = sample_update(&mut rng, cfg, gen.slot_names().len());
            let p = gen.update(MASTER, slot, schema_change)?;
            report.updates.push(UpdateRecord {
                iteration,
                branch: MASTER.to_string(),
                slot: gen.slot_names()[slot].clone(),
                schema_change,
                touched: p.iter().map(|(s, _)| s.clone()).collect(),
            });
            p
        };

        let mut changes = BTreeMap::new();
        for (slot, bundle) in &payloads {
            archive(repo.store(), bundle, &ledger, time)?;
            changes.insert(slot.clone(), repo.register_component(bundle, MASTER)?);
        }
        let before = runner.invocations();
        let commit = repo.update(MASTER, changes, &runner, &ledger)?;
        report.executed.push(runner.invocations() - before);
        report.points.push(point(super::linear::VERSIONED, iteration, &ledger));

        for (_, bundle) in gen.all_payloads(MASTER)? {
            archive(&folder, &bundle, &base_ledger, time)?;
        }
        let before = base_runner.invocations();
        run_pipeline(&commit.pipeline, &base_runner, &base_ledger, None)?;
        report.baseline_executed.push(base_runner.invocations() - before);
        report.points.push(point(BASELINE, iteration, &base_ledger));
    }
    Ok(report)
}
