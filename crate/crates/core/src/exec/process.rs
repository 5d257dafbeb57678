//! Runs components as external executables.
//!
//! The payload is unpacked into `<work>/payload`, inputs into `<work>/in`
//! (directly for a single upstream slot, one sub-directory per slot
//! otherwise), and the entry executable is invoked as
//!
//! ```text
//! <exe> --input-dir <work>/in --output-dir <work>/out --meta <work>/meta
//! ```
//!
//! It must write `data.*` and `schema.txt` (one header per line, LF) and may
//! write `score.txt`.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use crate::bundle::Bundle;
use crate::exec::executor::{split_output, ExecOutcome, ExecRequest, Executor};
use crate::exec::ExecError;
use crate::model::{ComponentMeta, METAFILE_NAME};

const STDERR_TAIL: usize = 2048;

#[derive(Clone, Debug, Default)]
pub struct ProcessExecutor {
    /// Parent directory for per-run work directories; system temp if unset.
    pub work_root: Option<PathBuf>,
    /// Report the metafile's `cost_ms` instead of measured wall time.
    pub virtual_time: bool,
    /// Extra environment for the child.
    pub env: Vec<(String, String)>,
}

impl ProcessExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn virtual_time(mut self, on: bool) -> Self {
        self.virtual_time = on;
        self
    }
}

impl Executor for ProcessExecutor {
    fn execute(&self, req: &ExecRequest<'_>) -> Result<ExecOutcome, ExecError> {
        let work = match &self.work_root {
            Some(root) => {
                fs::create_dir_all(root)?;
                tempfile::Builder::new().prefix("run-").tempdir_in(root)?
            }
            None => tempfile::Builder::new().prefix("pipevc-run-").tempdir()?,
        };
        let payload_dir = work.path().join("payload");
        let in_dir = work.path().join("in");
        let out_dir = work.path().join("out");
        let meta_path = work.path().join("meta");
        fs::create_dir_all(&payload_dir)?;
        fs::create_dir_all(&in_dir)?;
        fs::create_dir_all(&out_dir)?;
        req.payload.write_to_dir(&payload_dir)?;

        match req.inputs {
            [] => {}
            [single] => single.files.write_to_dir(&in_dir)?,
            many => {
                for input in many {
                    input.files.write_to_dir(&in_dir.join(&input.slot))?;
                }
            }
        }

        let meta_text = req
            .payload
            .get_str(METAFILE_NAME)
            .ok_or_else(|| ExecError::BadPayload(format!("missing {METAFILE_NAME}")))?;
        let meta = ComponentMeta::parse(meta_text)?;
        let mut meta_out = meta_text.trim_end().to_string();
        meta_out.push_str(&format!(
            "\ncomponent={}\nlineage={}\n",
            req.component.id(),
            req.lineage_string()
        ));
        fs::write(&meta_path, meta_out)?;

        let exe = payload_dir.join(&meta.entry);
        if !exe.is_file() {
            return Err(ExecError::BadPayload(format!("entry `{}` not found", meta.entry)));
        }
        let started = Instant::now();
        let output = Command::new(&exe)
            .arg("--input-dir")
            .arg(&in_dir)
            .arg("--output-dir")
            .arg(&out_dir)
            .arg("--meta")
            .arg(&meta_path)
            .current_dir(work.path())
            .envs(self.env.iter().map(|(k, v)| (k, v)))
            .output()?;
        let wall = started.elapsed().as_secs_f64();
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let tail_start = stderr.len().saturating_sub(STDERR_TAIL);
            let tail_start = (tail_start..stderr.len())
                .find(|&i| stderr.is_char_boundary(i))
                .unwrap_or(stderr.len());
            return Err(ExecError::NonZeroExit {
                code: output.status.code(),
                stderr_tail: stderr[tail_start..].trim_end().to_string(),
            });
        }
        let (output, scores) = split_output(Bundle::from_dir(&out_dir)?)?;
        let execution_time = match (self.virtual_time, meta.cost_ms) {
            (true, Some(ms)) => ms as f64 / 1000.0,
            _ => wall,
        };
        Ok(ExecOutcome {
            output,
            scores,
            execution_time,
        })
    }
}
