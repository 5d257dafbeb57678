mod args;
mod output;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use thiserror::Error;

use args::{BenchKind, Cli, Command, ExecutorKind, Format};
use output::Output;
use pipevc::bench::{self, scenario, BenchError, HistoryConfig, InstanceConfig};
use pipevc::bundle::{Bundle, BundleError};
use pipevc::exec::{Executor, ProcessExecutor, StubExecutor, TimeMode};
use pipevc::mergex::{metric_merge, MergeError, MergeOptions, MergeSession, NodeId, SearchTree, Strategy, ROOT};
use pipevc::model::{ModelError, PipelineSpec};
use pipevc::search::{self, Budget, SearchError, SearchMethod, TrialSetup};
use pipevc::vcs::{Commit, Repository, VcsError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Vcs(#[from] VcsError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

struct Ctx {
    cli: Cli,
}

impl Ctx {
    fn time(&self) -> TimeMode {
        if self.cli.real_time {
            TimeMode::Real
        } else {
            TimeMode::DEFAULT_VIRTUAL
        }
    }

    fn executor(&self) -> Arc<dyn Executor> {
        match self.cli.executor {
            ExecutorKind::Process => Arc::new(ProcessExecutor::new().virtual_time(!self.cli.real_time)),
            ExecutorKind::Stub => Arc::new(StubExecutor::new().real_sleep(self.cli.real_time)),
        }
    }

    fn open(&self) -> Result<Repository, CliError> {
        Ok(Repository::open(&self.cli.repo)?)
    }

    fn open_read_only(&self) -> Result<Repository, CliError> {
        Ok(Repository::open_read_only(&self.cli.repo)?)
    }

    fn runner(&self, repo: &Repository) -> pipevc::exec::ComponentRunner {
        pipevc::exec::ComponentRunner::new(repo.store().clone(), self.executor(), self.time())
    }
}

fn bindings_text(c: &Commit) -> String {
    c.pipeline
        .iter()
        .map(|(slot, v)| format!("{slot}={}", v.version))
        .collect::<Vec<_>>()
        .join(",")
}

fn scores_text(c: &Commit) -> String {
    c.scores
        .iter()
        .map(|(k, v)| format!("{k}={v:.6}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn commit_output(c: &Commit) -> Output {
    let mut out = Output::record();
    out.field("commit", c.id)
        .field("branch", &c.branch)
        .field("parents", c.parents.iter().map(|p| p.short()).collect::<Vec<_>>().join(","))
        .field("bindings", bindings_text(c))
        .field("scores", scores_text(c));
    out
}

fn run(ctx: &Ctx) -> Result<Output, CliError> {
    match &ctx.cli.command {
        Command::Init { pipeline } => {
            let spec = PipelineSpec::parse_text(&read(pipeline)?)?;
            let repo = Repository::init(&ctx.cli.repo, spec)?;
            let mut out = Output::record();
            out.field("repo", ctx.cli.repo.display())
                .field("pipeline", repo.spec().name())
                .field("branch", repo.current_branch());
            Ok(out)
        }
        Command::Branch { name: None, .. } => {
            let repo = ctx.open_read_only()?;
            let mut out = Output::list();
            for (name, head) in repo.branches() {
                out.row()
                    .set("branch", name)
                    .set("head", head.map(|h| h.short()).unwrap_or_default())
                    .set("current", name == repo.current_branch());
            }
            Ok(out)
        }
        Command::Branch { name: Some(name), from } => {
            let mut repo = ctx.open()?;
            let from = from.as_deref().map(|f| repo.resolve_commit(f)).transpose()?;
            let head = repo.create_branch(name, from)?;
            let mut out = Output::record();
            out.field("branch", name).field("head", head);
            Ok(out)
        }
        Command::Checkout { branch } => {
            let mut repo = ctx.open()?;
            repo.checkout(branch)?;
            let mut out = Output::record();
            out.field("branch", branch);
            Ok(out)
        }
        Command::Commit { binds, branch } => {
            let mut repo = ctx.open()?;
            let branch = branch.clone().unwrap_or_else(|| repo.current_branch().to_string());
            let mut payloads = Vec::new();
            for (slot, dir) in binds {
                payloads.push((slot.clone(), Bundle::from_dir(dir)?));
            }
            let runner = ctx.runner(&repo);
            let ledger = pipevc::exec::MetricsLedger::new();
            let commit = repo.commit_payloads(&branch, &payloads, &runner, &ledger)?;
            let mut out = commit_output(&commit);
            out.field("executed", runner.invocations())
                .field("pipeline_time_s", format!("{:.6}", commit.stats.pipeline_time()));
            Ok(out)
        }
        Command::Log { branch } => {
            let repo = ctx.open_read_only()?;
            let branch = branch.clone().unwrap_or_else(|| repo.current_branch().to_string());
            let mut out = Output::list();
            for c in repo.log(&branch)? {
                out.row()
                    .set("commit", c.short_id())
                    .set("branch", &c.branch)
                    .set("parents", c.parents.iter().map(|p| p.short()).collect::<Vec<_>>().join(","))
                    .set("bindings", bindings_text(&c))
                    .set("scores", scores_text(&c));
            }
            Ok(out)
        }
        Command::Spaces { head, merge_head } => {
            let repo = ctx.open_read_only()?;
            let session = MergeSession::prepare(&repo, head, merge_head)?;
            let mut out = Output::list();
            for (i, slot) in repo.spec().slots().iter().enumerate() {
                let vs = session.spaces.versions(i);
                out.row()
                    .set("slot", &slot.name)
                    .set("size", vs.len())
                    .set("versions", vs.iter().map(|v| v.version.to_string()).collect::<Vec<_>>().join(","));
            }
            Ok(out)
        }
        Command::Tree { head, merge_head } => {
            let repo = ctx.open_read_only()?;
            let session = MergeSession::prepare(&repo, head, merge_head)?;
            let full = session.tree()?;
            let mut pruned = full.clone();
            pruned.apply_lut(&session.lut());
            pruned.mark_executed_from_history(&session.history);
            Ok(tree_output(&full, &pruned))
        }
        Command::Merge {
            branch,
            ff_only,
            metric,
            strategy,
            search,
            budget,
            report,
        } => merge(ctx, branch, *ff_only, metric, strategy.as_deref(), search.as_deref(), *budget, report.as_deref()),
        Command::Stats => {
            let repo = ctx.open_read_only()?;
            let s = repo.store().stats();
            let mut out = Output::record();
            out.field("pipeline", repo.spec().name())
                .field("branch", repo.current_branch())
                .field("branches", repo.branches().count())
                .field("commits", repo.commit_count())
                .field("components", repo.component_names().map(|n| repo.versions(n).len()).sum::<usize>())
                .field("objects", s.object_count)
                .field("chunks", s.chunk_count)
                .field("physical_bytes", s.physical_bytes)
                .field("logical_bytes", s.logical_bytes);
            Ok(out)
        }
        Command::Bench { which } => bench_cmd(ctx, which),
        Command::Scaffold { dir } => {
            let p = scenario::payloads().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut out = Output::list();
            let mut put = |name: String, b: &Bundle| -> Result<(), CliError> {
                let d = dir.join(&name);
                b.write_to_dir(&d)?;
                out.row().set("payload", name).set("path", d.display());
                Ok(())
            };
            fs::create_dir_all(dir).map_err(|source| CliError::File {
                path: dir.display().to_string(),
                source,
            })?;
            put("dataset".into(), &p.dataset)?;
            for (i, b) in p.cleanse.iter().enumerate() {
                put(format!("data_cleanse-{i}"), b)?;
            }
            for (i, b) in p.extract.iter().enumerate() {
                put(format!("feature_extract-{i}"), b)?;
            }
            for (i, b) in p.cnn.iter().enumerate() {
                put(format!("cnn-{i}"), b)?;
            }
            write(&dir.join("pipeline.txt"), &scenario::spec().to_text())?;
            Ok(out)
        }
    }
}

fn tree_output(full: &SearchTree, pruned: &SearchTree) -> Output {
    let kept: HashSet<NodeId> = pruned.reachable().into_iter().collect();
    let mut out = Output::list();
    let mut stack: Vec<NodeId> = full.node(ROOT).children.iter().rev().copied().collect();
    while let Some(n) = stack.pop() {
        let node = full.node(n);
        let c = full.component(n).expect("non-root");
        let state = if !kept.contains(&n) {
            "pruned"
        } else if pruned.node(n).executed {
            "executed"
        } else {
            "pending"
        };
        let mut label = format!("{}{}", "  ".repeat(node.depth - 1), c.name);
        label.push('@');
        label.push_str(&c.version.to_string());
        let score = pruned
            .node(n)
            .scores
            .as_ref()
            .and_then(|s| s.get("score"))
            .map(|s| format!("{s:.6}"))
            .unwrap_or_default();
        out.row()
            .set("node", n)
            .set("depth", node.depth)
            .set("component", label)
            .set("state", state)
            .set("score", score);
        stack.extend(node.children.iter().rev().copied());
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn merge(
    ctx: &Ctx,
    branch: &str,
    ff_only: bool,
    metric: &str,
    strategy: Option<&str>,
    search_method: Option<&str>,
    budget: Option<usize>,
    report: Option<&Path>,
) -> Result<Output, CliError> {
    let mut repo = ctx.open()?;
    let head = repo.current_branch().to_string();
    let fast_forward = repo.is_fast_forward(&head, branch)?;
    if ff_only || (fast_forward && strategy.is_none() && search_method.is_none()) {
        let commit = repo.fast_forward_merge(&head, branch)?;
        let mut out = commit_output(&commit);
        out.field("merge", "fast-forward").field("invocations", 0);
        return Ok(out);
    }
    let strategy: Strategy = strategy.unwrap_or("pcpr").parse()?;
    let opts = MergeOptions {
        metric: metric.to_string(),
        strategy,
        time: ctx.time(),
    };
    let (commit, rep) = match search_method {
        Some(m) => {
            let method: SearchMethod = m.parse()?;
            let budget = budget.map(Budget::Candidates).unwrap_or(Budget::Unlimited);
            search::budgeted_merge(&mut repo, &head, branch, &opts, method, budget, ctx.cli.seed, ctx.executor())?
        }
        None if budget.is_some() => return Err(CliError::Usage("--budget needs --search".into())),
        None => metric_merge(&mut repo, &head, branch, &opts, ctx.executor())?,
    };
    if let Some(path) = report {
        write(path, &rep.to_csv(repo.spec()))?;
    }
    let mut out = commit_output(&commit);
    out.field("merge", rep.strategy)
        .field("metric", &rep.metric)
        .field("winner_score", format!("{:.6}", rep.winner_score))
        .field("candidates_total", rep.candidates_total)
        .field("candidates_after_pruning", rep.candidates_after_pruning)
        .field("evaluated", rep.candidates.len())
        .field("invocations", rep.invocations)
        .field("cpt_s", format!("{:.6}", rep.ledger.cpt()));
    Ok(out)
}

fn load_config(path: Option<&Path>) -> Result<HistoryConfig, CliError> {
    match path {
        Some(p) => Ok(HistoryConfig::from_toml(&read(p)?)?),
        None => Ok(HistoryConfig::default()),
    }
}

fn emit_csv(out_path: Option<&Path>, csv: &str, rows: usize) -> Result<Output, CliError> {
    let mut out = Output::record();
    match out_path {
        Some(p) => {
            write(p, csv)?;
            out.field("csv", p.display()).field("rows", rows);
        }
        None => print!("{csv}"),
    }
    Ok(out)
}

fn bench_cmd(ctx: &Ctx, which: &BenchKind) -> Result<Output, CliError> {
    let stub: Arc<dyn Executor> = Arc::new(StubExecutor::new().real_sleep(ctx.cli.real_time));
    match which {
        BenchKind::Linear { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let r = bench::linear_experiment(&cfg, stub, ctx.time())?;
            emit_csv(out.as_deref(), &r.to_csv(), r.points.len())
        }
        BenchKind::Nonlinear { config, out, metric } => {
            let cfg = load_config(config.as_deref())?;
            let r = bench::nonlinear_experiment(&cfg, metric, stub, ctx.time())?;
            emit_csv(out.as_deref(), &r.to_csv(), r.merges.len())
        }
        BenchKind::Search { trials, instance, out } => {
            let exec = Arc::new(StubExecutor::new().with_score_fn(bench::additive_score_fn(*instance)));
            let cfg = InstanceConfig {
                seed: *instance,
                min_slots: 4,
                p_schema_change: 0.0,
                ..InstanceConfig::default()
            };
            let inst = bench::random_instance(&cfg, exec.clone(), ctx.time())?;
            let session = MergeSession::prepare(&inst.repo, pipevc::model::MASTER, bench::instance::MERGE_BRANCH)?;
            let mut tree = session.tree()?;
            tree.apply_lut(&session.lut());
            tree.mark_executed_from_history(&session.history);
            let setup = TrialSetup {
                tree,
                store: inst.repo.store().clone(),
                executor: exec,
                time: ctx.time(),
                metric: "score".into(),
            };
            let mut csv = String::new();
            let mut rows = 0;
            for method in [SearchMethod::Prioritized, SearchMethod::Random] {
                let r = search::run_trials(&setup, method, *trials, ctx.cli.seed)?;
                let text = r.to_csv();
                if csv.is_empty() {
                    csv.push_str(&text);
                } else {
                    csv.extend(text.lines().skip(1).map(|l| format!("{l}\n")));
                }
                rows += r.positions.len();
            }
            emit_csv(out.as_deref(), &csv, rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let ctx = Ctx { cli };
    match run(&ctx) {
        Ok(out) => {
            print!("{}", out.render(format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            match format {
                Format::Machine => eprintln!("error={}", msg.replace(char::is_whitespace, "_")),
                Format::Table => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
