use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pipevc", version, about = "Version control and metric-driven merging for ML pipelines")]
pub struct Cli {
    /// Repository directory.
    #[arg(long, global = true, env = "PIPEVC_REPO", default_value = ".")]
    pub repo: PathBuf,

    /// `machine` prints one `key=value` pair per line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// How components are run.
    #[arg(long, global = true, value_enum, env = "PIPEVC_EXECUTOR", default_value_t = ExecutorKind::Process)]
    pub executor: ExecutorKind,

    /// Measure wall-clock time instead of charging declared costs.
    #[arg(long, global = true)]
    pub real_time: bool,

    /// Seed for randomized operations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExecutorKind {
    /// Spawn each payload's entry executable.
    Process,
    /// Interpret stub payloads in-process.
    Stub,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a repository for the pipeline described in a spec file.
    Init {
        #[arg(long)]
        pipeline: PathBuf,
    },
    /// List branches, or create one.
    Branch {
        name: Option<String>,
        /// Commit (id prefix or branch) to start from; defaults to the current head.
        #[arg(long)]
        from: Option<String>,
    },
    /// Switch the current branch.
    Checkout { branch: String },
    /// Register payload directories, run the pipeline and commit.
    Commit {
        /// `slot=dir`, repeatable.
        #[arg(long = "bind", required = true, value_parser = parse_binding)]
        binds: Vec<(String, PathBuf)>,
        /// Defaults to the current branch.
        #[arg(long)]
        branch: Option<String>,
    },
    /// Show the history of a branch, newest first.
    Log {
        #[arg(long)]
        branch: Option<String>,
    },
    /// Print each slot's search space for a merge.
    Spaces { head: String, merge_head: String },
    /// Print the merge search tree with pruned and executed nodes marked.
    Tree { head: String, merge_head: String },
    /// Merge a branch into the current one.
    Merge {
        branch: String,
        /// Only fast-forward; fail otherwise.
        #[arg(long)]
        ff_only: bool,
        #[arg(long, default_value = "score")]
        metric: String,
        /// naive, full, pc or pcpr.
        #[arg(long)]
        strategy: Option<String>,
        /// prioritized or random; visits candidates in that order.
        #[arg(long)]
        search: Option<String>,
        /// Candidates to evaluate when searching.
        #[arg(long)]
        budget: Option<usize>,
        /// Write the per-candidate CSV report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Repository and store statistics.
    Stats,
    /// Run a benchmark and print its CSV.
    Bench {
        #[command(subcommand)]
        which: BenchKind,
    },
    /// Write the reference scenario's pipeline spec and payloads to a directory.
    Scaffold { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum BenchKind {
    /// Versioned vs. archive-folder baseline over one linear history.
    Linear {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge-strategy comparison on a two-branch history.
    Nonlinear {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "score")]
        metric: String,
    },
    /// Prioritized vs. random search trials on a random merge instance.
    Search {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        instance: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_binding(s: &str) -> Result<(String, PathBuf), String> {
    let (slot, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected slot=dir, got `{s}`"))?;
    if slot.is_empty() || path.is_empty() {
        return Err(format!("expected slot=dir, got `{s}`"));
    }
    Ok((slot.to_string(), PathBuf::from(path)))
}
