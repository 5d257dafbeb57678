//! The reference two-branch merge scenario.
//!
//! Four slots `dataset → data_cleanse → feature_extract → cnn`. The common
//! ancestor binds (dc 0.0, fe 0.0, cnn 0.0) on master. Branch `dev` then
//! commits cnn 0.1; fe 1.0 (new schema) with cnn 0.2; cnn 0.3; dc 0.1.
//! In the diverged variant master also commits cnn 0.4 afterwards, which
//! is incompatible with fe 1.0. Search spaces come out as sizes
//! `[1, 2, 2, 5]`: 20 candidates, 10 of them compatible.

use std::sync::Arc;

use crate::bundle::Bundle;
use crate::exec::{make_stub_component, ComponentRunner, ExecError, MetricsLedger, StubSpec};
use crate::model::{ComponentKind, PipelineSpec, Slot};
use crate::vcs::{Repository, VcsError};

pub const DEV: &str = "dev";
pub const SLOTS: [&str; 4] = ["dataset", "data_cleanse", "feature_extract", "cnn"];

pub fn spec() -> PipelineSpec {
    let slots = SLOTS
        .iter()
        .enumerate()
        .map(|(i, name)| Slot {
            name: name.to_string(),
            kind: if i == 0 {
                ComponentKind::Dataset
            } else {
                ComponentKind::Library
            },
        })
        .collect();
    PipelineSpec::chain("readmission", slots).expect("static chain is valid")
}

/// Every payload the scenario commits, indexed by version.
#[derive(Clone, Debug)]
pub struct Payloads {
    pub dataset: Bundle,
    /// dc 0.0, dc 0.1
    pub cleanse: [Bundle; 2],
    /// fe 0.0, fe 1.0
    pub extract: [Bundle; 2],
    /// cnn 0.0 .. cnn 0.4
    pub cnn: [Bundle; 5],
}

fn headers(hs: &[&str]) -> Vec<String> {
    hs.iter().map(|s| s.to_string()).collect()
}

pub fn payloads() -> Result<Payloads, ExecError> {
    let raw = headers(&["age", "sex", "bp"]);
    let fe0 = headers(&["age", "sex", "bp", "f1"]);
    let fe1 = headers(&["age", "sex", "bp", "f2"]);
    let mk = |s: StubSpec| make_stub_component(&s);
    let cnn = |input: &[String], seed: u64| mk(StubSpec::model("cnn", input, seed).cost_ms(300).params(2048, seed));
    Ok(Payloads {
        dataset: mk(StubSpec::source("dataset", &["age", "sex", "bp"], 64 * 1024, 11).cost_ms(100))?,
        cleanse: [
            mk(StubSpec::identity("data_cleanse", &raw).cost_ms(200).params(256, 1))?,
            mk(StubSpec::identity("data_cleanse", &raw).cost_ms(200).params(256, 2))?,
        ],
        extract: [
            mk(StubSpec::append_column("feature_extract", &raw, "f1", "1").cost_ms(200))?,
            mk(StubSpec::append_column("feature_extract", &raw, "f2", "2")
                .cost_ms(200)
                .schema_changed(true))?,
        ],
        cnn: [cnn(&fe0, 100)?, cnn(&fe0, 101)?, cnn(&fe1, 102)?, cnn(&fe1, 103)?, cnn(&fe0, 104)?],
    })
}

fn step(
    repo: &mut Repository,
    branch: &str,
    binds: &[(&str, &Bundle)],
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<(), VcsError> {
    let binds: Vec<(String, Bundle)> = binds.iter().map(|(s, b)| (s.to_string(), (*b).clone())).collect();
    repo.commit_payloads(branch, &binds, runner, ledger)?;
    Ok(())
}

/// Commit the ancestor on master, branch `dev` and commit its four updates.
pub fn build_fast_forward(
    repo: &mut Repository,
    p: &Payloads,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<(), VcsError> {
    let master = repo.current_branch().to_string();
    step(
        repo,
        &master,
        &[
            (SLOTS[0], &p.dataset),
            (SLOTS[1], &p.cleanse[0]),
            (SLOTS[2], &p.extract[0]),
            (SLOTS[3], &p.cnn[0]),
        ],
        runner,
        ledger,
    )?;
    repo.create_branch(DEV, None)?;
    step(repo, DEV, &[(SLOTS[3], &p.cnn[1])], runner, ledger)?;
    step(repo, DEV, &[(SLOTS[2], &p.extract[1]), (SLOTS[3], &p.cnn[2])], runner, ledger)?;
    step(repo, DEV, &[(SLOTS[3], &p.cnn[3])], runner, ledger)?;
    step(repo, DEV, &[(SLOTS[1], &p.cleanse[1])], runner, ledger)?;
    Ok(())
}

/// [`build_fast_forward`], then cnn 0.4 on master.
pub fn build_diverged(
    repo: &mut Repository,
    p: &Payloads,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<(), VcsError> {
    build_fast_forward(repo, p, runner, ledger)?;
    let master = repo.current_branch().to_string();
    step(repo, &master, &[(SLOTS[3], &p.cnn[4])], runner, ledger)
}

/// A fresh in-memory repository holding the diverged history, with the
/// runner and ledger used to build it.
pub fn diverged(
    executor: Arc<dyn crate::exec::Executor>,
    time: crate::exec::TimeMode,
) -> Result<(Repository, ComponentRunner, MetricsLedger), VcsError> {
    let mut repo = Repository::in_memory(spec());
    let runner = ComponentRunner::new(repo.store().clone(), executor, time);
    let ledger = MetricsLedger::new();
    let p = payloads().map_err(|e| VcsError::Run {
        slot: "payloads".into(),
        source: e,
    })?;
    build_diverged(&mut repo, &p, &runner, &ledger)?;
    Ok((repo, runner, ledger))
}

/// Like [`diverged`] but without the master-side update.
pub fn fast_forward(
    executor: Arc<dyn crate::exec::Executor>,
    time: crate::exec::TimeMode,
) -> Result<(Repository, ComponentRunner, MetricsLedger), VcsError> {
    let mut repo = Repository::in_memory(spec());
    let runner = ComponentRunner::new(repo.store().clone(), executor, time);
    let ledger = MetricsLedger::new();
    let p = payloads().map_err(|e| VcsError::Run {
        slot: "payloads".into(),
        source: e,
    })?;
    build_fast_forward(&mut repo, &p, &runner, &ledger)?;
    Ok((repo, runner, ledger))
}
