use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::bundle::Bundle;
use crate::digest::Digest;
use crate::exec::executor::{schema_headers, ExecRequest, Executor, InputArtifact, Scores};
use crate::exec::metrics::{MetricsLedger, RunStats};
use crate::exec::ExecError;
use crate::model::{schema_hash, ComponentId, ComponentVersion, PipelineSpec};
use crate::store::{ObjectKind, Store};

/// A component output archived in the store, with its declared schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArtifactRef {
    pub object: Digest,
    pub schema: Digest,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeMode {
    /// Storage time is bytes moved divided by a fixed throughput, so ledgers
    /// are exactly reproducible.
    Virtual { storage_bytes_per_sec: f64 },
    /// Wall-clock measurement.
    Real,
}

impl TimeMode {
    pub const DEFAULT_VIRTUAL: TimeMode = TimeMode::Virtual {
        storage_bytes_per_sec: 100.0 * 1024.0 * 1024.0,
    };

    /// Seconds charged for moving `bytes` that took `measured` wall seconds.
    pub fn storage_seconds(self, bytes: u64, measured: f64) -> f64 {
        match self {
            TimeMode::Virtual {
                storage_bytes_per_sec,
            } => bytes as f64 / storage_bytes_per_sec,
            TimeMode::Real => measured,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComponentRun {
    pub output: ArtifactRef,
    pub stats: RunStats,
    pub scores: Scores,
}

/// Runs components against a store: materializes payload and inputs, calls
/// the executor, checks the produced schema, archives the output.
///
/// Payloads are read from `payloads`; inputs are read from and outputs
/// written to `outputs`. Executor invocations are counted per lineage.
pub struct ComponentRunner {
    payloads: Arc<Store>,
    outputs: Arc<Store>,
    executor: Arc<dyn Executor>,
    time: TimeMode,
    payload_cache: Mutex<HashMap<Digest, (Arc<Bundle>, u64)>>,
    invocations: Mutex<HashMap<Vec<ComponentId>, u64>>,
    total_invocations: AtomicU64,
    total_attempts: AtomicU64,
}

impl ComponentRunner {
    pub fn new(store: Arc<Store>, executor: Arc<dyn Executor>, time: TimeMode) -> Self {
        Self::with_stores(store.clone(), store, executor, time)
    }

    pub fn with_stores(
        payloads: Arc<Store>,
        outputs: Arc<Store>,
        executor: Arc<dyn Executor>,
        time: TimeMode,
    ) -> Self {
        ComponentRunner {
            payloads,
            outputs,
            executor,
            time,
            payload_cache: Mutex::new(HashMap::new()),
            invocations: Mutex::new(HashMap::new()),
            total_invocations: AtomicU64::new(0),
            total_attempts: AtomicU64::new(0),
        }
    }

    pub fn output_store(&self) -> &Arc<Store> {
        &self.outputs
    }

    pub fn payload_store(&self) -> &Arc<Store> {
        &self.payloads
    }

    pub fn time_mode(&self) -> TimeMode {
        self.time
    }

    /// Calls to [`run_component`](Self::run_component), including those
    /// rejected before reaching the executor.
    pub fn attempts(&self) -> u64 {
        self.total_attempts.load(Ordering::SeqCst)
    }

    /// Executor invocations, failed ones included.
    pub fn invocations(&self) -> u64 {
        self.total_invocations.load(Ordering::SeqCst)
    }

    /// Executor invocations per lineage (one entry per distinct upstream
    /// history).
    pub fn invocations_by_lineage(&self) -> HashMap<Vec<ComponentId>, u64> {
        self.invocations.lock().expect("counter lock poisoned").clone()
    }

    fn storage_seconds(&self, bytes: u64, measured: f64) -> f64 {
        self.time.storage_seconds(bytes, measured)
    }

    fn payload(&self, id: &Digest) -> Result<(Arc<Bundle>, u64), ExecError> {
        if let Some(hit) = self.payload_cache.lock().expect("cache lock poisoned").get(id) {
            return Ok(hit.clone());
        }
        let bytes = self.payloads.get(id)?;
        let len = bytes.len() as u64;
        let bundle = Arc::new(Bundle::decode(&bytes)?);
        self.payload_cache
            .lock()
            .expect("cache lock poisoned")
            .insert(*id, (bundle.clone(), len));
        Ok((bundle, len))
    }

    /// Load an archived artifact.
    pub fn materialize(&self, artifact: &ArtifactRef) -> Result<Bundle, ExecError> {
        Ok(Bundle::decode(&self.outputs.get(&artifact.object)?)?)
    }

    /// Run one component on the outputs of its upstream slots.
    ///
    /// `inputs` pairs upstream slot names with their archived outputs;
    /// `lineage` identifies the run (see [`ExecRequest::lineage`]).
    pub fn run_component(
        &self,
        component: &ComponentVersion,
        inputs: &[(String, ArtifactRef)],
        lineage: &[ComponentId],
        ledger: &MetricsLedger,
    ) -> Result<ComponentRun, ExecError> {
        self.total_attempts.fetch_add(1, Ordering::SeqCst);

        let load_start = Instant::now();
        let (payload, mut moved) = self.payload(&component.payload)?;
        let mut materialized = Vec::with_capacity(inputs.len());
        for (slot, artifact) in inputs {
            let bytes = self.outputs.get(&artifact.object)?;
            moved += bytes.len() as u64;
            materialized.push(InputArtifact {
                slot: slot.clone(),
                files: Bundle::decode(&bytes)?,
            });
        }
        materialized.sort_by(|a, b| a.slot.cmp(&b.slot));
        let load_secs = self.storage_seconds(moved, load_start.elapsed().as_secs_f64());

        for (slot, artifact) in inputs {
            if !component.input_schema.accepts(&artifact.schema) {
                ledger.accumulate(&RunStats {
                    execution_time: 0.0,
                    storage_time: load_secs,
                    storage_bytes_delta: 0,
                });
                return Err(ExecError::IncompatibleInput {
                    component: component.display(),
                    upstream: slot.clone(),
                });
            }
        }

        *self
            .invocations
            .lock()
            .expect("counter lock poisoned")
            .entry(lineage.to_vec())
            .or_default() += 1;
        self.total_invocations.fetch_add(1, Ordering::SeqCst);
        let request = ExecRequest {
            component,
            payload: &payload,
            inputs: &materialized,
            lineage,
        };
        let outcome = match self.executor.execute(&request) {
            Ok(o) => o,
            Err(e) => {
                ledger.accumulate(&RunStats {
                    execution_time: 0.0,
                    storage_time: load_secs,
                    storage_bytes_delta: 0,
                });
                return Err(e);
            }
        };

        let produced = schema_hash(&schema_headers(&outcome.output)?);
        if produced != component.output_schema {
            ledger.accumulate(&RunStats {
                execution_time: outcome.execution_time,
                storage_time: load_secs,
                storage_bytes_delta: 0,
            });
            return Err(ExecError::SchemaMismatch {
                component: component.display(),
                declared: component.output_schema,
                produced,
            });
        }

        let archive_start = Instant::now();
        let encoded = outcome.output.encode();
        let before = self.outputs.stats().physical_bytes;
        let manifest = self.outputs.put_bytes(&encoded, ObjectKind::Output)?;
        let delta = self.outputs.stats().physical_bytes - before;
        let archive_secs =
            self.storage_seconds(encoded.len() as u64, archive_start.elapsed().as_secs_f64());

        let stats = RunStats {
            execution_time: outcome.execution_time,
            storage_time: load_secs + archive_secs,
            storage_bytes_delta: delta,
        };
        ledger.accumulate(&stats);
        Ok(ComponentRun {
            output: ArtifactRef {
                object: manifest.id,
                schema: produced,
            },
            stats,
            scores: outcome.scores,
        })
    }

    /// Run a root-to-leaf list of pipeline nodes, skipping those that already
    /// carry an output.
    ///
    /// `steps` must be in the spec's topological order and each slot's
    /// upstream slots must appear earlier. Stops at the first failure; the
    /// results of the completed prefix are still returned.
    pub fn execute_node_list(
        &self,
        spec: &PipelineSpec,
        steps: &[PathStep],
        ledger: &MetricsLedger,
    ) -> NodeListOutcome {
        let mut results: Vec<StepResult> = Vec::with_capacity(steps.len());
        let mut invocations = 0;
        let position = |slot: usize, upto: usize| steps[..upto].iter().position(|s| s.slot == slot);
        for (i, step) in steps.iter().enumerate() {
            if let Some(output) = step.reuse {
                results.push(StepResult {
                    output,
                    scores: Scores::new(),
                    stats: RunStats::default(),
                    executed_now: false,
                });
                continue;
            }
            let mut inputs = Vec::new();
            let mut missing = None;
            for p in spec.predecessor_indices(step.slot) {
                match position(p, i) {
                    Some(k) => inputs.push((spec.slots()[p].name.clone(), results[k].output)),
                    None => missing = Some(spec.slots()[p].name.clone()),
                }
            }
            if let Some(slot) = missing {
                return NodeListOutcome {
                    results,
                    failure: Some((i, ExecError::BadInput(format!("upstream slot `{slot}` not on path")))),
                    invocations,
                };
            }
            let lineage: Vec<ComponentId> = spec
                .ancestry(step.slot)
                .into_iter()
                .filter_map(|s| position(s, i + 1).map(|k| steps[k].component.id()))
                .collect();
            invocations += 1;
            match self.run_component(&step.component, &inputs, &lineage, ledger) {
                Ok(run) => results.push(StepResult {
                    output: run.output,
                    scores: run.scores,
                    stats: run.stats,
                    executed_now: true,
                }),
                Err(e) => {
                    return NodeListOutcome {
                        results,
                        failure: Some((i, e)),
                        invocations,
                    }
                }
            }
        }
        NodeListOutcome {
            results,
            failure: None,
            invocations,
        }
    }
}

/// One node on a walking path.
#[derive(Clone, Debug)]
pub struct PathStep {
    pub slot: usize,
    pub component: ComponentVersion,
    /// Output recorded on an already-executed node.
    pub reuse: Option<ArtifactRef>,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub output: ArtifactRef,
    pub scores: Scores,
    pub stats: RunStats,
    pub executed_now: bool,
}

#[derive(Debug)]
pub struct NodeListOutcome {
    /// Results for the completed prefix of the path.
    pub results: Vec<StepResult>,
    /// Index of the failing step and its error.
    pub failure: Option<(usize, ExecError)>,
    pub invocations: usize,
}

impl NodeListOutcome {
    /// Scores of the whole path, later slots overriding earlier ones.
    pub fn scores(&self) -> Scores {
        let mut all = Scores::new();
        for r in &self.results {
            all.extend(r.scores.iter().map(|(k, v)| (k.clone(), *v)));
        }
        all
    }
}
