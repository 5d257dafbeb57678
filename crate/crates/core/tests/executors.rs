use std::sync::Arc;

use pipevc::bundle::Bundle;
use pipevc::exec::{
    make_stub_component, ArtifactRef, ComponentRunner, ExecError, Executor, MetricsLedger,
    ProcessExecutor, StubExecutor, StubSpec, TimeMode,
};
use pipevc::model::{schema_hash, ComponentMeta, ComponentVersion, InputSchema, SemanticVersion, METAFILE_NAME};
use pipevc::store::{ObjectKind, Store, StoreMode};
use pipevc::Digest;

fn register(store: &Store, payload: &Bundle) -> ComponentVersion {
    let meta = ComponentMeta::parse(payload.get_str(METAFILE_NAME).unwrap()).unwrap();
    let id = store.put_bytes(&payload.encode(), ObjectKind::Payload).unwrap().id;
    ComponentVersion {
        name: meta.name.clone(),
        kind: meta.kind,
        version: SemanticVersion::initial("master", meta.output_schema),
        payload: id,
        input_schema: meta.input_schema,
        output_schema: meta.output_schema,
        schema_changed: false,
    }
}

struct Chain {
    store: Arc<Store>,
    parts: Vec<ComponentVersion>,
}

fn chain() -> Chain {
    let store = Arc::new(Store::in_memory(StoreMode::Dedup));
    let base: Vec<String> = vec!["age".into(), "income".into()];
    let mut extended = base.clone();
    extended.push("risk".into());
    let specs = [
        StubSpec::source("census", &["age", "income"], 20_000, 7).cost_ms(120),
        StubSpec::append_column("flag", &base, "risk", "1").cost_ms(40),
        StubSpec::identity("copy", &extended),
        StubSpec::model("clf", &extended, 99).cost_ms(250).params(4096, 3),
    ];
    let parts = specs
        .iter()
        .map(|s| register(&store, &make_stub_component(s).unwrap()))
        .collect();
    Chain { store, parts }
}

fn run_all(chain: &Chain, executor: Arc<dyn Executor>) -> (Vec<ArtifactRef>, f64, MetricsLedger) {
    let runner = ComponentRunner::new(chain.store.clone(), executor, TimeMode::DEFAULT_VIRTUAL);
    let ledger = MetricsLedger::new();
    let mut outputs: Vec<ArtifactRef> = Vec::new();
    let mut score = f64::NAN;
    for (i, c) in chain.parts.iter().enumerate() {
        let inputs: Vec<(String, ArtifactRef)> = outputs
            .last()
            .map(|o| vec![(chain.parts[i - 1].name.clone(), *o)])
            .unwrap_or_default();
        let lineage: Vec<_> = chain.parts[..=i].iter().map(|c| c.id()).collect();
        let run = runner.run_component(c, &inputs, &lineage, &ledger).unwrap();
        if let Some(s) = run.scores.get("score") {
            score = *s;
        }
        outputs.push(run.output);
    }
    (outputs, score, ledger)
}

#[test]
fn process_and_stub_executors_agree() {
    let c = chain();
    let (stub_out, stub_score, stub_ledger) = run_all(&c, Arc::new(StubExecutor::new()));
    let (proc_out, proc_score, proc_ledger) =
        run_all(&c, Arc::new(ProcessExecutor::new().virtual_time(true)));
    assert_eq!(stub_out, proc_out);
    assert_eq!(stub_score.to_bits(), proc_score.to_bits());
    assert!((0.0..1.0).contains(&stub_score));
    let (a, b) = (stub_ledger.snapshot(), proc_ledger.snapshot());
    assert_eq!(a.cet, b.cet);
    assert!((a.cet - 0.41).abs() < 1e-12);
    assert_eq!(a.runs, 4);
}

#[test]
fn append_column_schema_matches_oracle() {
    let c = chain();
    let (out, _, _) = run_all(&c, Arc::new(StubExecutor::new()));
    assert_eq!(out[1].schema, schema_hash(&["age", "income", "risk"]));
    assert_eq!(out[1].schema, out[2].schema);
    let runner = ComponentRunner::new(c.store.clone(), Arc::new(StubExecutor::new()), TimeMode::Real);
    let data = runner.materialize(&out[1]).unwrap();
    let text = data.get_str("data.csv").unwrap();
    assert!(text.lines().all(|l| l.ends_with(",1") && l.split(',').count() == 3));
}

#[test]
fn nonzero_exit_is_reported() {
    let store = Arc::new(Store::in_memory(StoreMode::Dedup));
    let mut payload = Bundle::new();
    payload
        .insert(
            METAFILE_NAME,
            format!("name=broken\nkind=dataset\nschema_changed=false\noutput_schema={}\n", schema_hash(&["a"])),
        )
        .insert_executable("run", "#!/bin/sh\necho boom >&2\nexit 4\n");
    let comp = register(&store, &payload);
    let runner = ComponentRunner::new(store, Arc::new(ProcessExecutor::new()), TimeMode::DEFAULT_VIRTUAL);
    let ledger = MetricsLedger::new();
    match runner.run_component(&comp, &[], &[comp.id()], &ledger) {
        Err(ExecError::NonZeroExit { code, stderr_tail }) => {
            assert_eq!(code, Some(4));
            assert_eq!(stderr_tail, "boom");
        }
        other => panic!("expected NonZeroExit, got {other:?}"),
    }
    assert_eq!(runner.invocations(), 1);
    assert_eq!(ledger.snapshot().cet, 0.0);
}

#[test]
fn undeclared_schema_is_rejected() {
    let c = chain();
    let mut wrong = c.parts[1].clone();
    wrong.output_schema = schema_hash(&["age", "income"]);
    let runner = ComponentRunner::new(c.store.clone(), Arc::new(StubExecutor::new()), TimeMode::DEFAULT_VIRTUAL);
    let ledger = MetricsLedger::new();
    let src = runner.run_component(&c.parts[0], &[], &[c.parts[0].id()], &ledger).unwrap();
    let err = runner
        .run_component(&wrong, &[("census".into(), src.output)], &[], &ledger)
        .unwrap_err();
    assert!(matches!(err, ExecError::SchemaMismatch { .. }));
}

#[test]
fn incompatible_input_is_rejected_before_running() {
    let c = chain();
    let mut picky = c.parts[3].clone();
    picky.input_schema = InputSchema::Digest(Digest::of(b"something else"));
    let runner = ComponentRunner::new(c.store.clone(), Arc::new(StubExecutor::new()), TimeMode::DEFAULT_VIRTUAL);
    let ledger = MetricsLedger::new();
    let src = runner.run_component(&c.parts[0], &[], &[c.parts[0].id()], &ledger).unwrap();
    let before = ledger.snapshot().cet;
    let err = runner
        .run_component(&picky, &[("census".into(), src.output)], &[], &ledger)
        .unwrap_err();
    assert!(matches!(err, ExecError::IncompatibleInput { .. }));
    assert_eq!(ledger.snapshot().cet, before);
}
