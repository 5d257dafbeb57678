//! Desk-scale experiment harness: synthetic histories, linear versioning
//! against an archive-folders baseline, merge-strategy comparison, and
//! random merge instances.

pub mod history;
pub mod instance;
pub mod linear;
pub mod nonlinear;
pub mod scenario;

use thiserror::Error;

pub use history::{generate_history, sample_update, ChainGen, CostTable, HistoryConfig, UpdateRecord};
pub use instance::{additive_score_fn, random_instance, InstanceConfig, MergeInstance};
pub use linear::{linear_experiment, CurvePoint, LinearReport};
pub use nonlinear::{nonlinear_experiment, NonlinearReport};

use crate::exec::ExecError;
use crate::mergex::MergeError;
use crate::store::StoreError;
use crate::vcs::VcsError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Vcs(#[from] VcsError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Render curve points as CSV with the `system,iteration,...` header.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("system,iteration,cet_s,cst_s,cpt_s,css_bytes\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            p.system,
            p.iteration,
            p.cet,
            p.cst,
            p.cet + p.cst,
            p.css
        ));
    }
    out
}
