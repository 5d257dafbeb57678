use std::collections::BTreeMap;

use crate::bundle::Bundle;
use crate::exec::ExecError;
use crate::model::{ComponentId, ComponentVersion};

/// Metric name → value. A bare number in `score.txt` is stored as `score`.
pub type Scores = BTreeMap<String, f64>;

pub const DEFAULT_METRIC: &str = "score";
pub const SCHEMA_FILE: &str = "schema.txt";
pub const SCORE_FILE: &str = "score.txt";
pub const DATA_PREFIX: &str = "data.";

/// Materialized output of an upstream slot.
#[derive(Clone, Debug)]
pub struct InputArtifact {
    pub slot: String,
    pub files: Bundle,
}

pub struct ExecRequest<'a> {
    pub component: &'a ComponentVersion,
    pub payload: &'a Bundle,
    /// Sorted by slot name.
    pub inputs: &'a [InputArtifact],
    /// Versions of every upstream slot this run depends on, then the
    /// component itself, in topological order.
    pub lineage: &'a [ComponentId],
}

impl ExecRequest<'_> {
    /// `;`-joined lineage ids, as passed to executables in the meta file.
    pub fn lineage_string(&self) -> String {
        lineage_string(self.lineage)
    }
}

pub fn lineage_string(lineage: &[ComponentId]) -> String {
    lineage
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Clone, Debug)]
pub struct ExecOutcome {
    /// `data.*` files plus `schema.txt`.
    pub output: Bundle,
    pub scores: Scores,
    /// Seconds, measured or virtual.
    pub execution_time: f64,
}

/// Something that can run one component.
pub trait Executor: Send + Sync {
    fn execute(&self, request: &ExecRequest<'_>) -> Result<ExecOutcome, ExecError>;
}

pub fn parse_scores(text: &str) -> Result<Scores, ExecError> {
    let bad = || ExecError::BadScore(text.trim().to_string());
    let trimmed = text.trim();
    let mut scores = Scores::new();
    if trimmed.is_empty() {
        return Ok(scores);
    }
    if !trimmed.contains('=') {
        scores.insert(DEFAULT_METRIC.to_string(), trimmed.parse().map_err(|_| bad())?);
        return Ok(scores);
    }
    for line in trimmed.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(bad)?;
        scores.insert(k.trim().to_string(), v.trim().parse().map_err(|_| bad())?);
    }
    Ok(scores)
}

/// Split raw output files into the archived artifact and its scores.
pub fn split_output(mut files: Bundle) -> Result<(Bundle, Scores), ExecError> {
    let scores = match files.remove(SCORE_FILE) {
        Some(f) => parse_scores(&String::from_utf8_lossy(&f.bytes))?,
        None => Scores::new(),
    };
    if files.get(SCHEMA_FILE).is_none() {
        return Err(ExecError::MissingOutput(SCHEMA_FILE.into()));
    }
    if files.find_prefixed(DATA_PREFIX).next().is_none() {
        return Err(ExecError::MissingOutput("data.*".into()));
    }
    Ok((files, scores))
}

/// Header lines of a `schema.txt`.
pub fn schema_headers(files: &Bundle) -> Result<Vec<String>, ExecError> {
    let text = files
        .get_str(SCHEMA_FILE)
        .ok_or_else(|| ExecError::MissingOutput(SCHEMA_FILE.into()))?;
    Ok(text.lines().map(str::to_string).collect())
}
