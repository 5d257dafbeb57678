//! Deterministic stub components.
//!
//! [`make_stub_component`] writes a self-contained payload: a metafile, a
//! `stub.conf`, and a POSIX shell `run` script that honours the process
//! protocol. [`StubExecutor`] interprets the same `stub.conf` in-process,
//! producing byte-identical artifacts and scores without spawning anything.
//!
//! Roles:
//! - `source`: emits the generated `data.csv` shipped in the payload
//! - `identity`: copies its input
//! - `append-column`: appends `,<value>` to every row and `<column>` to the
//!   schema
//! - `model`: emits a small model artifact and a score derived from a seeded
//!   hash of the run lineage

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::Bundle;
use crate::digest::{Digest, Hasher};
use crate::exec::executor::{
    lineage_string, ExecOutcome, ExecRequest, Executor, InputArtifact, Scores, DATA_PREFIX,
    DEFAULT_METRIC, SCHEMA_FILE,
};
use crate::exec::ExecError;
use crate::kv::KvDoc;
use crate::model::{schema_hash, ComponentId, ComponentKind, METAFILE_NAME};

pub const STUB_CONF: &str = "stub.conf";
pub const STUB_SLEEP_ENV: &str = "PIPEVC_STUB_SLEEP";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StubRole {
    Source { bytes: usize, seed: u64 },
    Identity,
    AppendColumn { column: String, value: String },
    Model { score_seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StubSpec {
    pub name: String,
    pub kind: ComponentKind,
    pub role: StubRole,
    pub cost_ms: u64,
    /// Declared output headers.
    pub schema_out: Vec<String>,
    /// Accepted input headers; `None` accepts anything.
    pub input_schema: Option<Vec<String>>,
    pub schema_changed: bool,
    /// Size of an opaque `params.bin` shipped in the payload.
    pub params_bytes: usize,
    pub params_seed: u64,
}

impl StubSpec {
    pub fn source(name: &str, headers: &[&str], bytes: usize, seed: u64) -> Self {
        StubSpec {
            name: name.into(),
            kind: ComponentKind::Dataset,
            role: StubRole::Source { bytes, seed },
            cost_ms: 0,
            schema_out: headers.iter().map(|s| s.to_string()).collect(),
            input_schema: None,
            schema_changed: false,
            params_bytes: 0,
            params_seed: 0,
        }
    }

    pub fn identity(name: &str, headers: &[String]) -> Self {
        StubSpec {
            name: name.into(),
            kind: ComponentKind::Library,
            role: StubRole::Identity,
            cost_ms: 0,
            schema_out: headers.to_vec(),
            input_schema: Some(headers.to_vec()),
            schema_changed: false,
            params_bytes: 0,
            params_seed: 0,
        }
    }

    pub fn append_column(name: &str, input: &[String], column: &str, value: &str) -> Self {
        let mut out = input.to_vec();
        out.push(column.to_string());
        StubSpec {
            name: name.into(),
            kind: ComponentKind::Library,
            role: StubRole::AppendColumn {
                column: column.into(),
                value: value.into(),
            },
            cost_ms: 0,
            schema_out: out,
            input_schema: Some(input.to_vec()),
            schema_changed: false,
            params_bytes: 0,
            params_seed: 0,
        }
    }

    pub fn model(name: &str, input: &[String], score_seed: u64) -> Self {
        StubSpec {
            name: name.into(),
            kind: ComponentKind::Library,
            role: StubRole::Model { score_seed },
            cost_ms: 0,
            schema_out: vec!["model".into()],
            input_schema: Some(input.to_vec()),
            schema_changed: false,
            params_bytes: 0,
            params_seed: 0,
        }
    }

    pub fn cost_ms(mut self, ms: u64) -> Self {
        self.cost_ms = ms;
        self
    }

    pub fn schema_changed(mut self, changed: bool) -> Self {
        self.schema_changed = changed;
        self
    }

    pub fn params(mut self, bytes: usize, seed: u64) -> Self {
        self.params_bytes = bytes;
        self.params_seed = seed;
        self
    }
}

fn bad(msg: impl Into<String>) -> ExecError {
    ExecError::BadConfig(msg.into())
}

fn check_text(what: &str, s: &str) -> Result<(), ExecError> {
    if s.contains(['\n', '\r', ',', '\\', '=']) || s != s.trim() {
        return Err(bad(format!("{what} `{s}` contains a reserved character")));
    }
    Ok(())
}

fn validate(spec: &StubSpec) -> Result<(), ExecError> {
    check_text("name", &spec.name)?;
    if spec.name.is_empty() || spec.name.contains(['@', '#', ';']) {
        return Err(bad(format!("invalid name `{}`", spec.name)));
    }
    if spec.schema_out.is_empty() {
        return Err(bad("schema_out must list at least one header"));
    }
    for h in spec.schema_out.iter().chain(spec.input_schema.iter().flatten()) {
        check_text("header", h)?;
        if h.is_empty() {
            return Err(bad("empty header"));
        }
    }
    match (&spec.role, spec.kind) {
        (StubRole::Source { .. }, ComponentKind::Dataset) => {}
        (StubRole::Source { .. }, _) | (_, ComponentKind::Dataset) => {
            return Err(bad("datasets use the source role and only datasets do"))
        }
        _ => {}
    }
    match &spec.role {
        StubRole::Identity => {
            if let Some(input) = &spec.input_schema {
                if schema_hash(input) != schema_hash(&spec.schema_out) {
                    return Err(bad("identity stub must output its input schema"));
                }
            }
        }
        StubRole::AppendColumn { column, value } => {
            check_text("column", column)?;
            check_text("value", value)?;
            if let Some(input) = &spec.input_schema {
                let mut expected = input.clone();
                expected.push(column.clone());
                if schema_hash(&expected) != schema_hash(&spec.schema_out) {
                    return Err(bad("append-column stub must output input headers plus the column"));
                }
            }
        }
        _ => {}
    }
    Ok(())
}

fn source_data(headers: usize, bytes: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(bytes + 64);
    while out.len() < bytes {
        for col in 0..headers {
            if col > 0 {
                out.push(b',');
            }
            out.extend_from_slice(rng.gen_range(0u32..1_000_000).to_string().as_bytes());
        }
        out.push(b'\n');
    }
    out
}

fn params_blob(bytes: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; bytes];
    rand::RngCore::fill_bytes(&mut ChaCha8Rng::seed_from_u64(seed), &mut v);
    v
}

const RUN_SCRIPT: &str = r#"#!/bin/sh
# stub component generated by pipevc
set -eu
LC_ALL=C
export LC_ALL
here=$(cd "$(dirname "$0")" && pwd)
in_dir=""
out_dir=""
meta=""
while [ $# -gt 0 ]; do
  case "$1" in
    --input-dir) in_dir=$2; shift 2 ;;
    --output-dir) out_dir=$2; shift 2 ;;
    --meta) meta=$2; shift 2 ;;
    *) echo "stub: unknown argument $1" >&2; exit 2 ;;
  esac
done
conf() { sed -n "s/^$1=//p" "$here/stub.conf" | head -n 1; }
role=$(conf role)
if [ "${PIPEVC_STUB_SLEEP:-0}" = "1" ]; then
  sleep "$(awk -v ms="$(conf cost_ms)" 'BEGIN { printf "%.3f", ms / 1000 }')"
fi
case "$role" in
  source)
    cp "$here/data.csv" "$out_dir/data.csv"
    conf schema_out | tr ',' '\n' > "$out_dir/schema.txt"
    ;;
  identity)
    cp "$in_dir/data.csv" "$out_dir/data.csv"
    cp "$in_dir/schema.txt" "$out_dir/schema.txt"
    ;;
  append-column)
    awk -v v="$(conf value)" '{ print $0 "," v }' "$in_dir/data.csv" > "$out_dir/data.csv"
    cp "$in_dir/schema.txt" "$out_dir/schema.txt"
    conf column >> "$out_dir/schema.txt"
    ;;
  model)
    input_digest=$(find "$in_dir" -type f -name 'data.*' | sort | while read -r f; do cat "$f"; done | sha256sum | cut -d' ' -f1)
    component=$(sed -n 's/^component=//p' "$meta")
    lineage=$(sed -n 's/^lineage=//p' "$meta")
    printf 'model %s\ninput %s\n' "$component" "$input_digest" > "$out_dir/data.bin"
    conf schema_out | tr ',' '\n' > "$out_dir/schema.txt"
    h=$(printf '%s' "$(conf score_seed)|$lineage" | sha256sum | cut -c1-13)
    awk -v h="$h" 'BEGIN { d = "0123456789abcdef"; v = 0; for (i = 1; i <= length(h); i++) v = v * 16 + index(d, substr(h, i, 1)) - 1; printf "%.17g\n", v / 4503599627370496 }' > "$out_dir/score.txt"
    ;;
  *)
    echo "stub: unknown role $role" >&2
    exit 3
    ;;
esac
"#;

/// Build the payload bundle of a stub component.
pub fn make_stub_component(spec: &StubSpec) -> Result<Bundle, ExecError> {
    validate(spec)?;
    let mut meta = KvDoc::new();
    meta.push("name", &spec.name)
        .push("kind", spec.kind)
        .push("schema_changed", spec.schema_changed)
        .push("output_schema", schema_hash(&spec.schema_out))
        .push(
            "input_schema",
            match &spec.input_schema {
                None => "any".to_string(),
                Some(h) => schema_hash(h).to_hex(),
            },
        )
        .push("entry", "run")
        .push("cost_ms", spec.cost_ms);

    let mut conf = KvDoc::new();
    conf.push("cost_ms", spec.cost_ms)
        .push("schema_out", spec.schema_out.join(","));
    let mut bundle = Bundle::new();
    match &spec.role {
        StubRole::Source { bytes, seed } => {
            conf.push("role", "source");
            bundle.insert("data.csv", source_data(spec.schema_out.len(), *bytes, *seed));
        }
        StubRole::Identity => {
            conf.push("role", "identity");
        }
        StubRole::AppendColumn { column, value } => {
            conf.push("role", "append-column")
                .push("column", column)
                .push("value", value);
        }
        StubRole::Model { score_seed } => {
            conf.push("role", "model").push("score_seed", score_seed);
        }
    }
    if spec.params_bytes > 0 {
        bundle.insert("params.bin", params_blob(spec.params_bytes, spec.params_seed));
    }
    bundle
        .insert(METAFILE_NAME, meta.render())
        .insert(STUB_CONF, conf.render())
        .insert_executable("run", RUN_SCRIPT);
    Ok(bundle)
}

/// Seeded hash of a run lineage mapped into `[0, 1)`: the top 52 bits of
/// `sha256("<seed>|<lineage>")` divided by 2^52.
pub fn hash_score(seed: u64, lineage: &[ComponentId]) -> f64 {
    let d = Digest::of(format!("{seed}|{}", lineage_string(lineage)).as_bytes());
    let top = u64::from_str_radix(&d.to_hex()[..13], 16).expect("hex digits");
    top as f64 / (1u64 << 52) as f64
}

pub type ScoreFn = Arc<dyn Fn(&[ComponentId]) -> f64 + Send + Sync>;

/// In-process interpreter for stub payloads.
#[derive(Clone, Default)]
pub struct StubExecutor {
    /// Sleep for `cost_ms` instead of reporting it as virtual time.
    pub real_sleep: bool,
    score_fn: Option<ScoreFn>,
}

impl std::fmt::Debug for StubExecutor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StubExecutor")
            .field("real_sleep", &self.real_sleep)
            .field("custom_score", &self.score_fn.is_some())
            .finish()
    }
}

impl StubExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replace the hash score of model stubs with `f(lineage)`.
    pub fn with_score_fn(mut self, f: ScoreFn) -> Self {
        self.score_fn = Some(f);
        self
    }

    pub fn real_sleep(mut self, on: bool) -> Self {
        self.real_sleep = on;
        self
    }
}

fn single_csv_input(inputs: &[InputArtifact]) -> Result<&Bundle, ExecError> {
    match inputs {
        [one] if one.files.get("data.csv").is_some() => Ok(&one.files),
        _ => Err(ExecError::BadInput("expected exactly one input with data.csv".into())),
    }
}

fn append_to_rows(data: &[u8], value: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() + data.len() / 8);
    let body = data.strip_suffix(b"\n").unwrap_or(data);
    if data.is_empty() {
        return out;
    }
    for row in body.split(|&b| b == b'\n') {
        out.extend_from_slice(row);
        out.push(b',');
        out.extend_from_slice(value.as_bytes());
        out.push(b'\n');
    }
    out
}

impl Executor for StubExecutor {
    fn execute(&self, req: &ExecRequest<'_>) -> Result<ExecOutcome, ExecError> {
        let conf_text = req
            .payload
            .get_str(STUB_CONF)
            .ok_or_else(|| ExecError::BadPayload(format!("not a stub: missing {STUB_CONF}")))?;
        let conf = KvDoc::parse(conf_text).map_err(|e| bad(e.to_string()))?;
        let cost_ms: u64 = conf.parse_value("cost_ms").map_err(|e| bad(e.to_string()))?.unwrap_or(0);
        let started = Instant::now();
        if self.real_sleep {
            std::thread::sleep(Duration::from_millis(cost_ms));
        }
        let schema_line = || {
            conf.get("schema_out")
                .map(|s| format!("{}\n", s.replace(',', "\n")))
                .unwrap_or_default()
        };
        let mut output = Bundle::new();
        let mut scores = Scores::new();
        match conf.require("role").map_err(|e| bad(e.to_string()))? {
            "source" => {
                let data = req
                    .payload
                    .get("data.csv")
                    .ok_or_else(|| ExecError::BadPayload("source stub without data.csv".into()))?;
                output.insert("data.csv", data.to_vec()).insert(SCHEMA_FILE, schema_line());
            }
            "identity" => {
                let input = single_csv_input(req.inputs)?;
                output
                    .insert("data.csv", input.get("data.csv").unwrap_or_default().to_vec())
                    .insert(SCHEMA_FILE, input.get(SCHEMA_FILE).unwrap_or_default().to_vec());
            }
            "append-column" => {
                let input = single_csv_input(req.inputs)?;
                let value = conf.require("value").map_err(|e| bad(e.to_string()))?;
                let column = conf.require("column").map_err(|e| bad(e.to_string()))?;
                let mut schema = input.get(SCHEMA_FILE).unwrap_or_default().to_vec();
                schema.extend_from_slice(column.as_bytes());
                schema.push(b'\n');
                output
                    .insert("data.csv", append_to_rows(input.get("data.csv").unwrap_or_default(), value))
                    .insert(SCHEMA_FILE, schema);
            }
            "model" => {
                let mut h = Hasher::new();
                for input in req.inputs {
                    for path in input.files.find_prefixed(DATA_PREFIX) {
                        h.update(input.files.get(path).unwrap_or_default());
                    }
                }
                let body = format!("model {}\ninput {}\n", req.component.id(), h.finish());
                output.insert("data.bin", body).insert(SCHEMA_FILE, schema_line());
                let seed: u64 = conf
                    .parse_value("score_seed")
                    .map_err(|e| bad(e.to_string()))?
                    .unwrap_or(0);
                let score = match &self.score_fn {
                    Some(f) => f(req.lineage),
                    None => hash_score(seed, req.lineage),
                };
                scores.insert(DEFAULT_METRIC.to_string(), score);
            }
            other => return Err(bad(format!("unknown role `{other}`"))),
        }
        let execution_time = if self.real_sleep {
            started.elapsed().as_secs_f64()
        } else {
            cost_ms as f64 / 1000.0
        };
        Ok(ExecOutcome {
            output,
            scores,
            execution_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_get_value_appended() {
        assert_eq!(append_to_rows(b"1,2\n3,4\n", "x"), b"1,2,x\n3,4,x\n");
        assert_eq!(append_to_rows(b"1\n2", "x"), b"1,x\n2,x\n");
        assert_eq!(append_to_rows(b"", "x"), b"");
    }

    #[test]
    fn source_data_reaches_size_deterministically() {
        let a = source_data(3, 10_000, 5);
        assert!(a.len() >= 10_000);
        assert_eq!(a, source_data(3, 10_000, 5));
        assert_ne!(a, source_data(3, 10_000, 6));
        assert!(source_data(2, 0, 1).is_empty());
    }

    #[test]
    fn bad_configs_rejected() {
        let h = vec!["a".to_string()];
        let mut s = StubSpec::identity("x", &h);
        s.schema_out = vec!["b".into()];
        assert!(matches!(make_stub_component(&s), Err(ExecError::BadConfig(_))));
        let mut s = StubSpec::model("m", &h, 1);
        s.kind = ComponentKind::Dataset;
        assert!(make_stub_component(&s).is_err());
        let s = StubSpec::append_column("f", &h, "b", "has,comma");
        assert!(make_stub_component(&s).is_err());
        let mut s = StubSpec::append_column("f", &h, "b", "v");
        s.schema_out = h.clone();
        assert!(make_stub_component(&s).is_err());
        assert!(make_stub_component(&StubSpec::source("d", &[], 10, 1)).is_err());
    }

    #[test]
    fn hash_score_in_unit_interval() {
        for seed in 0..50 {
            let s = hash_score(seed, &[]);
            assert!((0.0..1.0).contains(&s));
        }
        assert_eq!(hash_score(3, &[]), hash_score(3, &[]));
    }
}
