//! Synthetic commit histories over a linear chain of stub components.
//!
//! The chain is `dataset → preproc… → model`. Each update samples the
//! pre-processing side or the model, optionally with a schema change. A
//! schema change alters the updated slot's output headers, so every
//! downstream slot whose input no longer matches is regenerated in the same
//! commit.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::BenchError;
use crate::bundle::Bundle;
use crate::exec::{make_stub_component, ComponentRunner, MetricsLedger, StubRole, StubSpec};
use crate::model::{ComponentKind, PipelineSpec, Slot};
use crate::vcs::{Commit, Repository};

use std::sync::Arc;

/// Virtual cost of each kind of slot, in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostTable {
    pub dataset_ms: u64,
    pub preproc_ms: u64,
    pub model_ms: u64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            dataset_ms: 100,
            preproc_ms: 200,
            model_ms: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistoryConfig {
    pub iterations: usize,
    pub p_update_preproc: f64,
    pub p_update_model: f64,
    pub p_schema_change: f64,
    pub seed: u64,
    pub costs: CostTable,
    /// Pre-processing slots between the dataset and the model.
    pub preproc_slots: usize,
    pub dataset_bytes: usize,
    pub model_bytes: usize,
    pub preproc_bytes: usize,
    /// Commits on each branch before a merge (non-linear runs only).
    pub head_updates: usize,
    pub merge_updates: usize,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        HistoryConfig {
            iterations: 10,
            p_update_preproc: 0.4,
            p_update_model: 0.6,
            p_schema_change: 0.1,
            seed: 7,
            costs: CostTable::default(),
            preproc_slots: 2,
            dataset_bytes: 1 << 20,
            model_bytes: 10 << 10,
            preproc_bytes: 1 << 10,
            head_updates: 2,
            merge_updates: 4,
        }
    }
}

impl HistoryConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: HistoryConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let probs = [self.p_update_preproc, self.p_update_model, self.p_schema_change];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BenchError::Config("probabilities must lie in [0, 1]".into()));
        }
        if (self.p_update_preproc + self.p_update_model - 1.0).abs() > 1e-9 {
            return Err(BenchError::Config("p_update_preproc + p_update_model must equal 1".into()));
        }
        if self.preproc_slots == 0 && self.p_update_preproc > 0.0 {
            return Err(BenchError::Config("pre-processing updates need at least one pre-processing slot".into()));
        }
        Ok(())
    }
}

/// One sampled update and the slots it ended up touching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateRecord {
    pub iteration: usize,
    pub branch: String,
    /// The sampled slot.
    pub slot: String,
    pub schema_change: bool,
    /// The sampled slot plus any successors regenerated for compatibility.
    pub touched: Vec<String>,
}

/// Stub chain state for one branch.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub stubs: Vec<StubSpec>,
}

/// Builds stub payloads for a linear chain and tracks each branch's
/// current stubs.
#[derive(Clone, Debug)]
pub struct ChainGen {
    names: Vec<String>,
    costs: CostTable,
    model_bytes: usize,
    preproc_bytes: usize,
    counter: u64,
    branches: BTreeMap<String, ChainState>,
}

fn headers(hs: &[&str]) -> Vec<String> {
    hs.iter().map(|s| s.to_string()).collect()
}

impl ChainGen {
    /// A chain with `preproc` pre-processing slots; the first alternates
    /// between identity and append-column roles.
    pub fn new(branch: &str, preproc: usize, cfg: &HistoryConfig) -> Self {
        let mut names = vec!["dataset".to_string()];
        names.extend((0..preproc).map(|i| format!("preproc{i}")));
        names.push("model".to_string());
        let raw = headers(&["age", "sex", "bp"]);
        let mut stubs = vec![StubSpec::source("dataset", &["age", "sex", "bp"], cfg.dataset_bytes, cfg.seed)
            .cost_ms(cfg.costs.dataset_ms)];
        let mut cur = raw;
        for (i, name) in names[1..=preproc].iter().enumerate() {
            let s = if i % 2 == 0 {
                StubSpec::identity(name, &cur)
            } else {
                StubSpec::append_column(name, &cur, &format!("f{i}"), "1")
            }
            .cost_ms(cfg.costs.preproc_ms)
            .params(cfg.preproc_bytes, 0);
            cur = s.schema_out.clone();
            stubs.push(s);
        }
        stubs.push(
            StubSpec::model("model", &cur, 0)
                .cost_ms(cfg.costs.model_ms)
                .params(cfg.model_bytes, 0),
        );
        let mut branches = BTreeMap::new();
        branches.insert(branch.to_string(), ChainState { stubs });
        ChainGen {
            names,
            costs: cfg.costs,
            model_bytes: cfg.model_bytes,
            preproc_bytes: cfg.preproc_bytes,
            counter: 0,
            branches,
        }
    }

    pub fn spec(&self) -> PipelineSpec {
        let slots = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| Slot {
                name: n.clone(),
                kind: if i == 0 { ComponentKind::Dataset } else { ComponentKind::Library },
            })
            .collect();
        PipelineSpec::chain("synthetic", slots).expect("generated chain is valid")
    }

    pub fn slot_names(&self) -> &[String] {
        &self.names
    }

    /// Every slot's payload on `branch`.
    pub fn all_payloads(&self, branch: &str) -> Result<Vec<(String, Bundle)>, BenchError> {
        let state = self.state(branch)?;
        self.names
            .iter()
            .zip(&state.stubs)
            .map(|(n, s)| Ok((n.clone(), make_stub_component(s)?)))
            .collect()
    }

    fn state(&self, branch: &str) -> Result<&ChainState, BenchError> {
        self.branches
            .get(branch)
            .ok_or_else(|| BenchError::Config(format!("no generator state for branch {branch}")))
    }

    /// Start tracking `branch` from `from`'s current stubs.
    pub fn fork_branch(&mut self, from: &str, branch: &str) -> Result<(), BenchError> {
        let state = self.state(from)?.clone();
        self.branches.insert(branch.to_string(), state);
        Ok(())
    }

    fn fresh(&mut self) -> u64 {
        self.counter += 1;
        self.counter
    }

    /// A new version of slot `i` on `branch`, plus whatever downstream
    /// regeneration a schema change requires. Returns the touched slots
    /// with their new payloads.
    pub fn update(
        &mut self,
        branch: &str,
        i: usize,
        schema_change: bool,
    ) -> Result<Vec<(String, Bundle)>, BenchError> {
        let tag = self.fresh();
        let last = self.names.len() - 1;
        let mut stubs = self.state(branch)?.stubs.clone();
        let old = stubs[i].clone();
        let mut new = old.clone();
        match &mut new.role {
            StubRole::Source { seed, .. } => *seed = seed.wrapping_add(1_000 + tag),
            StubRole::Model { score_seed } => *score_seed = tag,
            StubRole::Identity | StubRole::AppendColumn { .. } => {}
        }
        let bytes = if i == last { self.model_bytes } else { self.preproc_bytes };
        if i > 0 {
            new = new.params(bytes, tag).schema_changed(false);
        }
        if schema_change && i < last {
            let col = format!("s{tag}");
            new = match &old.role {
                StubRole::Source { .. } => {
                    new.schema_out.push(col);
                    new
                }
                StubRole::Identity => {
                    let input = old.input_schema.clone().unwrap_or_default();
                    StubSpec::append_column(&self.names[i], &input, &col, "0")
                }
                StubRole::AppendColumn { column, value } => {
                    let input = old.input_schema.clone().unwrap_or_default();
                    StubSpec::append_column(&self.names[i], &input, &format!("{column}_{col}"), value)
                }
                StubRole::Model { .. } => unreachable!("the model is last"),
            };
            if i > 0 {
                new = new.cost_ms(old.cost_ms).params(bytes, tag).schema_changed(true);
            }
        }
        stubs[i] = new;
        let mut touched = vec![i];
        for j in i + 1..=last {
            let upstream = stubs[j - 1].schema_out.clone();
            if stubs[j].input_schema.as_ref() == Some(&upstream) {
                break;
            }
            let prev = stubs[j].clone();
            let t = self.fresh();
            let regenerated = match &prev.role {
                StubRole::Identity => StubSpec::identity(&self.names[j], &upstream),
                StubRole::AppendColumn { column, value } => {
                    StubSpec::append_column(&self.names[j], &upstream, column, value)
                }
                StubRole::Model { .. } => StubSpec::model(&self.names[j], &upstream, t),
                StubRole::Source { .. } => unreachable!("the source is always first"),
            };
            let bytes = if j == last { self.model_bytes } else { self.preproc_bytes };
            let changed = regenerated.schema_out != prev.schema_out;
            stubs[j] = regenerated
                .cost_ms(prev.cost_ms)
                .params(bytes, t)
                .schema_changed(changed);
            touched.push(j);
        }
        self.branches.get_mut(branch).expect("checked above").stubs = stubs;
        let state = self.state(branch)?;
        touched
            .into_iter()
            .map(|j| Ok((self.names[j].clone(), make_stub_component(&state.stubs[j])?)))
            .collect()
    }

    /// Default per-slot costs used when building the chain.
    pub fn costs(&self) -> CostTable {
        self.costs
    }
}

/// Sample one update: which slot, and whether its schema changes.
pub fn sample_update(rng: &mut ChaCha8Rng, cfg: &HistoryConfig, slots: usize) -> (usize, bool) {
    let last = slots - 1;
    let preproc = slots - 2;
    if preproc > 0 && rng.gen_bool(cfg.p_update_preproc) {
        let i = 1 + rng.gen_range(0..preproc);
        (i, rng.gen_bool(cfg.p_schema_change))
    } else {
        (last, false)
    }
}

#[allow(clippy::too_many_arguments)]
/// Apply `cfg.iterations` sampled updates to `branch` of a repository whose
/// head already binds the generator's pipeline; returns the commits and the
/// update log.
pub fn generate_history(
    repo: &mut Repository,
    gen: &mut ChainGen,
    branch: &str,
    iterations: usize,
    cfg: &HistoryConfig,
    rng: &mut ChaCha8Rng,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
) -> Result<(Vec<Arc<Commit>>, Vec<UpdateRecord>), BenchError> {
    let mut commits = Vec::new();
    let mut log = Vec::new();
    for iteration in 1..=iterations {
        let (slot, schema_change) = sample_update(rng, cfg, gen.slot_names().len());
        let payloads = gen.update(branch, slot, schema_change)?;
        log.push(UpdateRecord {
            iteration,
            branch: branch.to_string(),
            slot: gen.slot_names()[slot].clone(),
            schema_change,
            touched: payloads.iter().map(|(s, _)| s.clone()).collect(),
        });
        commits.push(repo.commit_payloads(branch, &payloads, runner, ledger)?);
    }
    Ok((commits, log))
}
