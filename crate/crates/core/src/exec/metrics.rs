use std::sync::Mutex;

/// Cost of one component run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunStats {
    /// Seconds spent running the component itself.
    pub execution_time: f64,
    /// Seconds spent materializing inputs and archiving outputs.
    pub storage_time: f64,
    /// Physical bytes the run added to the store.
    pub storage_bytes_delta: u64,
}

impl RunStats {
    pub fn pipeline_time(&self) -> f64 {
        self.execution_time + self.storage_time
    }

    pub fn add(&mut self, other: &RunStats) {
        self.execution_time += other.execution_time;
        self.storage_time += other.storage_time;
        self.storage_bytes_delta += other.storage_bytes_delta;
    }
}

/// Cumulative execution time, storage time, pipeline time and storage size.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerSnapshot {
    pub cet: f64,
    pub cst: f64,
    pub css: u64,
    /// Component runs attempted, failures included.
    pub runs: u64,
}

impl LedgerSnapshot {
    /// Always `cet + cst`.
    pub fn cpt(&self) -> f64 {
        self.cet + self.cst
    }
}

/// Thread-safe accumulator of [`RunStats`].
#[derive(Debug, Default)]
pub struct MetricsLedger {
    inner: Mutex<LedgerSnapshot>,
}

impl MetricsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&self, stats: &RunStats) {
        let mut s = self.inner.lock().expect("ledger lock poisoned");
        s.cet += stats.execution_time.max(0.0);
        s.cst += stats.storage_time.max(0.0);
        s.css += stats.storage_bytes_delta;
        s.runs += 1;
    }

    /// Storage work outside a component run (payload archival, copying the
    /// merge result).
    pub fn add_storage(&self, seconds: f64, bytes: u64) {
        let mut s = self.inner.lock().expect("ledger lock poisoned");
        s.cst += seconds.max(0.0);
        s.css += bytes;
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        *self.inner.lock().expect("ledger lock poisoned")
    }
}

/// Pipeline-time speedup when a fraction `p` of the pipeline time is sped up
/// `k` times (e.g. model training spread over `k` workers).
pub fn speedup(p: f64, k: f64) -> Result<f64, super::ExecError> {
    if !(0.0..=1.0).contains(&p) || k.is_nan() || k < 1.0 {
        return Err(super::ExecError::OutOfDomain { p, k });
    }
    Ok(1.0 / ((1.0 - p) + p / k))
}
