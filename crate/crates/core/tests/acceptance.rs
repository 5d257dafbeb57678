//! End-to-end acceptance checks. Each test writes one `criterion N PASS|FAIL`
//! line straight to stderr, so it shows up even when output is captured.

use std::cmp::Ordering;
use std::io::Write;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pipevc::bench::linear::{BASELINE, VERSIONED};
use pipevc::bench::scenario::{self, DEV};
use pipevc::bench::{additive_score_fn, linear_experiment, random_instance, HistoryConfig, InstanceConfig};
use pipevc::exec::{
    speedup, ComponentRunner, ExecError, ExecOutcome, ExecRequest, Executor, MetricsLedger, StubExecutor, TimeMode,
};
use pipevc::mergex::{
    count_candidates_upper, evaluate, execute_tree, execution_counts, metric_merge, pruned_count_bounds,
    run_from_scratch, MergeOptions, MergeSession, NodeId, SearchSpace, SearchTree, Strategy, ROOT,
};
use pipevc::model::{
    is_compatible, next_version, schema_hash, ComponentKind, ComponentVersion, InputSchema, PipelineSpec,
    PipelineVersion, SemanticVersion, Slot, MASTER,
};
use pipevc::search::{prioritized_next, run_trials, ScoreState, SearchMethod, TrialSetup};
use pipevc::vcs::Repository;
use pipevc::Digest;

const C1_LIMIT: Duration = Duration::from_secs(10);
const C5_LIMIT: Duration = Duration::from_secs(30);
const C7_LIMIT: Duration = Duration::from_secs(60);
const C1_UPPER: u64 = 20;
const C1_PRUNED: usize = 10;
const C2_INSTANCES: u64 = 200;
const C4_INSTANCES: u64 = 100;
const C5_MODEL_HEAVY_SEED: u64 = 0;
const C5_MIN_CPT_RATIO: f64 = 2.0;
const C5_MIN_CSS_RATIO: f64 = 3.0;
const C5_CET_TOLERANCE: f64 = 1e-9;
const C6_EXPECTED: f64 = 4.705882;
const C6_TOLERANCE: f64 = 1e-6;
const C7_TREES: u64 = 50;
const C7_TRIALS: usize = 100;
const C7_INSTANCES: u64 = 10;
const C7_RANDOM_REL_TOLERANCE: f64 = 0.05;
const C8_HEADER_SETS: usize = 1000;

fn criterion(n: u32, title: &str, body: impl FnOnce() -> String) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(detail) => {
            let _ = writeln!(std::io::stderr(), "criterion {n} PASS: {title} ({detail})");
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "criterion {n} FAIL: {title}");
            resume_unwind(e);
        }
    }
}

fn stub() -> Arc<StubExecutor> {
    Arc::new(StubExecutor::new())
}

const VT: TimeMode = TimeMode::DEFAULT_VIRTUAL;

fn instance(cfg: InstanceConfig) -> Repository {
    random_instance(&cfg, stub(), VT).unwrap().repo
}

/// Every combination of one version per slot, in slot order.
fn cross_product(spaces: &SearchSpace, n: usize) -> Vec<Vec<ComponentVersion>> {
    let mut out = vec![Vec::new()];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                spaces.versions(i).iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

fn chain_compatible(spec: &PipelineSpec, bindings: &[ComponentVersion]) -> bool {
    spec.edges().all(|(u, d)| is_compatible(&bindings[u], &bindings[d]))
}

fn ids(bs: &[ComponentVersion]) -> Vec<pipevc::model::ComponentId> {
    bs.iter().map(|c| c.id()).collect()
}

#[test]
fn criterion_1_reference_merge_matches_brute_force() {
    criterion(1, "reference merge scenario", || {
        let start = Instant::now();
        let (mut repo, _, _) = scenario::diverged(stub(), VT).unwrap();
        let session = MergeSession::prepare(&repo, MASTER, DEV).unwrap();
        let spec = repo.spec().clone();
        let sizes = session.spaces.sizes();
        assert_eq!(count_candidates_upper(&sizes), C1_UPPER);

        let all = cross_product(&session.spaces, spec.len());
        assert_eq!(all.len() as u64, C1_UPPER);
        let compatible: Vec<_> = all.into_iter().filter(|b| chain_compatible(&spec, b)).collect();
        assert_eq!(compatible.len(), C1_PRUNED);
        let mut tree = session.tree().unwrap();
        tree.apply_lut(&session.lut());
        assert_eq!(tree.leaves().len(), C1_PRUNED);

        // Each compatible candidate run on its own, no reuse.
        let runner = ComponentRunner::new(repo.store().clone(), stub(), VT);
        let ledger = MetricsLedger::new();
        let scored: Vec<(f64, Vec<ComponentVersion>)> = compatible
            .into_iter()
            .map(|b| {
                let p = PipelineVersion::from_ordered(spec.clone(), b.clone()).unwrap();
                let run = repo.run_pipeline(&p, &runner, &ledger, false).unwrap();
                (run.scores["score"], b)
            })
            .collect();
        let changed = |b: &[ComponentVersion]| {
            b.iter().zip(&session.ancestor_bindings).filter(|(x, y)| x.id() != y.id()).count()
        };
        let best = scored
            .iter()
            .max_by(|(sa, a), (sb, b)| {
                sa.partial_cmp(sb)
                    .unwrap()
                    .then(changed(b).cmp(&changed(a)))
                    .then_with(|| {
                        let va: Vec<_> = a.iter().map(|c| &c.version).collect();
                        let vb: Vec<_> = b.iter().map(|c| &c.version).collect();
                        vb.cmp(&va)
                    })
            })
            .unwrap();

        let (commit, report) = metric_merge(&mut repo, MASTER, DEV, &MergeOptions::default(), stub()).unwrap();
        assert_eq!(report.candidates_total, C1_UPPER);
        assert_eq!(report.candidates_after_pruning, C1_PRUNED);
        assert_eq!(ids(&report.winner), ids(&best.1));
        assert_eq!(ids(commit.pipeline.bindings()), ids(&best.1));
        assert_eq!(report.winner_score, best.0);
        let elapsed = start.elapsed();
        assert!(elapsed < C1_LIMIT, "{elapsed:?}");
        format!("20 -> 10 candidates, winner score {:.4}, {elapsed:.2?}", best.0)
    });
}

#[test]
fn criterion_2_each_node_executes_once() {
    criterion(2, "execute-once under reuse", || {
        for seed in 0..C2_INSTANCES {
            let repo = instance(InstanceConfig { seed, ..InstanceConfig::default() });
            let session = MergeSession::prepare(&repo, MASTER, "dev").unwrap();
            let runner = ComponentRunner::new(repo.store().clone(), stub(), VT);
            evaluate(&session, Strategy::Pcpr, &runner, &MetricsLedger::new()).unwrap();
            let counts = runner.invocations_by_lineage();
            assert!(counts.values().all(|&c| c <= 1), "seed {seed}: {counts:?}");

            let repo = instance(InstanceConfig {
                seed,
                p_schema_change: 0.0,
                ..InstanceConfig::default()
            });
            let session = MergeSession::prepare(&repo, MASTER, "dev").unwrap();
            let sizes = session.spaces.sizes();
            let mut tree = session.tree().unwrap();
            let runner = ComponentRunner::new(repo.store().clone(), stub(), VT);
            let results = execute_tree(&mut tree, &session.lut(), &runner, &MetricsLedger::new());
            assert_eq!(results.len() as u64, sizes.iter().map(|&n| n as u64).product::<u64>());
            let expected: u64 = (1..=sizes.len()).map(|j| sizes[..j].iter().map(|&n| n as u64).product::<u64>()).sum();
            assert_eq!(runner.invocations(), expected, "seed {seed}, sizes {sizes:?}");
            assert!(runner.invocations_by_lineage().values().all(|&c| c == 1));
        }
        format!("{C2_INSTANCES} instances")
    });
}

#[test]
fn criterion_3_strategy_costs_are_ordered() {
    criterion(3, "pcpr <= pc <= full with identical winners", || {
        let mut strict = 0;
        for seed in 0..C2_INSTANCES {
            let repo = instance(InstanceConfig { seed, ..InstanceConfig::default() });
            let sizes = MergeSession::prepare(&repo, MASTER, "dev").unwrap().spaces.sizes();
            let mut inv = Vec::new();
            let mut winners = Vec::new();
            for strategy in Strategy::SEARCHING {
                let mut fork = repo.fork().unwrap();
                let opts = MergeOptions {
                    strategy,
                    ..MergeOptions::default()
                };
                let (_, report) = metric_merge(&mut fork, MASTER, "dev", &opts, stub()).unwrap();
                inv.push(report.invocations);
                winners.push(ids(&report.winner));
            }
            let (full, pc, pcpr) = (inv[0], inv[1], inv[2]);
            assert!(pcpr <= pc && pc <= full, "seed {seed}: {inv:?}");
            if sizes.iter().any(|&n| n > 1) {
                assert!(pcpr < full, "seed {seed}: {inv:?}");
                strict += 1;
            }
            assert!(winners.windows(2).all(|w| w[0] == w[1]), "seed {seed}");
        }
        format!("{C2_INSTANCES} instances, {strict} strict")
    });
}

#[test]
fn criterion_4_counting_formulas_match_enumeration() {
    criterion(4, "counting formulas", || {
        let mut single_edge = 0;
        for k in 0..C4_INSTANCES {
            let seed = 10_000 + k;
            let all_compatible = k % 2 == 0;
            let cfg = InstanceConfig {
                seed,
                p_schema_change: if all_compatible { 0.0 } else { 0.5 },
                ..InstanceConfig::default()
            };
            let repo = instance(cfg);
            let session = MergeSession::prepare(&repo, MASTER, "dev").unwrap();
            let spec = repo.spec().clone();
            let sizes = session.spaces.sizes();
            let candidates = cross_product(&session.spaces, sizes.len());
            let total = candidates.len() as u64;
            assert_eq!(count_candidates_upper(&sizes), total);

            let tree = session.tree().unwrap();
            let leaves = tree.leaves();
            assert_eq!(leaves.len() as u64, total);
            let path_nodes: u64 = leaves.iter().map(|&l| tree.path(l).len() as u64).sum();
            let (without, with) = execution_counts(&sizes);
            assert_eq!(without, path_nodes);
            assert_eq!(with, tree.reachable().len() as u64);
            if all_compatible {
                let r = ComponentRunner::new(repo.store().clone(), stub(), VT);
                run_from_scratch(&tree, &leaves, &r, &MetricsLedger::new());
                assert_eq!(r.invocations(), without);
                let r = ComponentRunner::new(repo.store().clone(), stub(), VT);
                execute_tree(&mut tree.clone(), &session.lut(), &r, &MetricsLedger::new());
                assert_eq!(r.invocations(), with);
            }

            let mut restricted = Vec::new();
            for j in 0..sizes.len() - 1 {
                let n_compat: Vec<usize> = session
                    .spaces
                    .versions(j)
                    .iter()
                    .map(|v| session.spaces.versions(j + 1).iter().filter(|w| is_compatible(v, w)).count())
                    .collect();
                let exact = candidates.iter().filter(|c| is_compatible(&c[j], &c[j + 1])).count() as u64;
                if exact < total {
                    restricted.push((j, exact));
                }
                if n_compat.contains(&0) {
                    assert!(pruned_count_bounds(&sizes, j, &n_compat).is_err());
                    continue;
                }
                let b = pruned_count_bounds(&sizes, j, &n_compat).unwrap();
                assert_eq!(b.exact, exact, "seed {seed} slot {j}");
                assert!(b.lower <= b.exact && total - b.exact <= b.upper_removed);
            }
            let mut pruned = tree.clone();
            pruned.apply_lut(&session.lut());
            let survivors = candidates.iter().filter(|c| chain_compatible(&spec, c)).count();
            assert_eq!(pruned.leaves().len(), survivors);
            match restricted.as_slice() {
                [] => assert_eq!(survivors as u64, total),
                [(_, exact)] => {
                    assert_eq!(survivors as u64, *exact);
                    single_edge += 1;
                }
                _ => {}
            }
        }
        format!("{C4_INSTANCES} instances, {single_edge} with one restricting edge")
    });
}

#[test]
fn criterion_5_linear_versioning_costs() {
    criterion(5, "linear history CET and CSS", || {
        let start = Instant::now();
        let cfg = HistoryConfig {
            seed: C5_MODEL_HEAVY_SEED,
            ..HistoryConfig::default()
        };
        let r = linear_experiment(&cfg, stub(), VT).unwrap();
        let (v, b) = (r.series(VERSIONED), r.series(BASELINE));
        assert_eq!(v.len(), cfg.iterations + 1);
        let c = &cfg.costs;
        let mut costs = vec![c.dataset_ms as f64 / 1000.0];
        costs.extend(std::iter::repeat_n(c.preproc_ms as f64 / 1000.0, cfg.preproc_slots));
        costs.push(c.model_ms as f64 / 1000.0);
        let names = ["dataset", "preproc0", "preproc1", "model"];
        let full: f64 = costs.iter().sum();

        let mut cet = full;
        let mut expected_executed = vec![costs.len() as u64];
        for u in &r.updates {
            let first = u.touched.iter().map(|s| names.iter().position(|n| n == s).unwrap()).min().unwrap();
            cet += costs[first..].iter().sum::<f64>();
            expected_executed.push((costs.len() - first) as u64);
            assert!((v[u.iteration].cet - cet).abs() < C5_CET_TOLERANCE, "{u:?}");
        }
        assert_eq!(r.executed, expected_executed);
        for (i, (x, y)) in v.iter().zip(&b).enumerate() {
            assert!(x.cet <= y.cet, "iteration {i}");
            assert!(x.css < y.css, "iteration {i}");
            assert!((y.cet - (i + 1) as f64 * full).abs() < C5_CET_TOLERANCE);
        }
        let models = r.updates.iter().filter(|u| u.slot == "model").count();
        let cpt_ratio = b.last().unwrap().cpt() / v.last().unwrap().cpt();
        assert!(cpt_ratio >= C5_MIN_CPT_RATIO, "{cpt_ratio}");

        let model_only = HistoryConfig {
            p_update_preproc: 0.0,
            p_update_model: 1.0,
            p_schema_change: 0.0,
            ..HistoryConfig::default()
        };
        let r = linear_experiment(&model_only, stub(), VT).unwrap();
        let (v, b) = (r.series(VERSIONED), r.series(BASELINE));
        for i in 1..v.len() {
            let total = b[i].css as f64 / v[i].css as f64;
            let step = (b[i].css - b[i - 1].css) as f64 / (v[i].css - v[i - 1].css) as f64;
            assert!(total >= C5_MIN_CSS_RATIO && step >= C5_MIN_CSS_RATIO, "iteration {i}: {total} {step}");
        }
        let css_ratio = b.last().unwrap().css as f64 / v.last().unwrap().css as f64;
        let elapsed = start.elapsed();
        assert!(elapsed < C5_LIMIT, "{elapsed:?}");
        format!("{models}/10 model updates, CPT ratio {cpt_ratio:.2}, model-only CSS ratio {css_ratio:.1}, {elapsed:.2?}")
    });
}

#[test]
fn criterion_6_speedup_formula() {
    criterion(6, "speedup formula", || {
        let s = speedup(0.9, 8.0).unwrap();
        assert!((s - C6_EXPECTED).abs() < C6_TOLERANCE, "{s}");
        assert!(1.0 / s < 0.25);
        let ps: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ks: Vec<f64> = (1..=20).map(f64::from).collect();
        for &p in &ps {
            assert_eq!(speedup(p, 1.0).unwrap(), 1.0);
        }
        for (i, &p) in ps.iter().enumerate() {
            for (j, &k) in ks.iter().enumerate() {
                let here = speedup(p, k).unwrap();
                if i > 0 {
                    let prev = speedup(ps[i - 1], k).unwrap();
                    assert!(if k > 1.0 { here > prev } else { here == prev });
                }
                if j > 0 {
                    let prev = speedup(p, ks[j - 1]).unwrap();
                    assert!(if p > 0.0 { here > prev } else { here == prev });
                }
            }
        }
        assert!(speedup(1.5, 2.0).is_err() && speedup(0.5, 0.5).is_err());
        format!("speedup(0.9, 8) = {s:.6}")
    });
}

fn synthetic_tree(sizes: &[usize]) -> SearchTree {
    let slots: Vec<Slot> = (0..sizes.len())
        .map(|i| Slot {
            name: format!("s{i}"),
            kind: if i == 0 { ComponentKind::Dataset } else { ComponentKind::Library },
        })
        .collect();
    let spec = Arc::new(PipelineSpec::chain("t", slots.clone()).unwrap());
    let spaces = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            (0..n)
                .map(|v| ComponentVersion {
                    name: format!("s{i}"),
                    kind: slots[i].kind,
                    version: SemanticVersion {
                        branch: MASTER.into(),
                        schema_ordinal: 0,
                        increment: v as u32,
                        schema_digest: Digest::ZERO,
                    },
                    payload: Digest::of(format!("{i}/{v}").as_bytes()),
                    input_schema: InputSchema::Any,
                    output_schema: Digest::ZERO,
                    schema_changed: false,
                })
                .collect()
        })
        .collect();
    SearchTree::build(SearchSpace::new(spec, spaces)).unwrap()
}

fn mean_of_children(t: &SearchTree, leaf_scores: &[Option<f64>], n: NodeId) -> Option<f64> {
    if t.node(n).depth == t.depth() {
        return leaf_scores[n];
    }
    let vals: Vec<f64> = t.node(n).children.iter().filter_map(|&c| mean_of_children(t, leaf_scores, c)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Over all leaves, the one whose root path is lexicographically best:
/// at each level a scored node beats an unscored one, a higher score beats
/// a lower one, and an earlier sibling wins ties.
fn priority_oracle(t: &SearchTree, leaf_scores: &[Option<f64>]) -> NodeId {
    let key = |leaf: NodeId| -> Vec<(Option<f64>, usize)> {
        t.path(leaf)
            .into_iter()
            .map(|n| {
                let parent = t.node(n).parent.unwrap_or(ROOT);
                let pos = t.node(parent).children.iter().position(|&c| c == n).unwrap();
                (mean_of_children(t, leaf_scores, n), pos)
            })
            .collect()
    };
    let cmp_level = |a: &(Option<f64>, usize), b: &(Option<f64>, usize)| match (a.0, b.0) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap().then(b.1.cmp(&a.1)),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => b.1.cmp(&a.1),
    };
    t.leaves()
        .into_iter()
        .max_by(|&a, &b| {
            key(a)
                .iter()
                .zip(&key(b))
                .map(|(x, y)| cmp_level(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .unwrap()
}

#[test]
fn criterion_7_prioritized_search() {
    criterion(7, "prioritized vs random search", || {
        let start = Instant::now();
        for seed in 0..C7_TREES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let depth = rng.gen_range(1..=4);
            let sizes: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=4)).collect();
            let t = synthetic_tree(&sizes);
            let mut scores = vec![None; t.arena_len()];
            let mut seeded = Vec::new();
            for l in t.leaves() {
                if rng.gen_bool(0.4) {
                    let s = rng.gen_range(0.0..1.0);
                    scores[l] = Some(s);
                    seeded.push((l, s));
                }
            }
            let state = ScoreState::with_leaf_scores(&t, seeded);
            assert_eq!(prioritized_next(&t, &state).unwrap(), priority_oracle(&t, &scores), "tree {seed}");
        }

        let (mut early, mut late) = (0.0, 0.0);
        let mut worst_random = 0.0f64;
        for seed in 0..C7_INSTANCES {
            let exec = Arc::new(StubExecutor::new().with_score_fn(additive_score_fn(seed)));
            let cfg = InstanceConfig {
                seed,
                min_slots: 4,
                p_schema_change: 0.0,
                ..InstanceConfig::default()
            };
            let repo = random_instance(&cfg, exec.clone(), VT).unwrap().repo;
            let session = MergeSession::prepare(&repo, MASTER, "dev").unwrap();
            let mut tree = session.tree().unwrap();
            tree.apply_lut(&session.lut());
            tree.mark_executed_from_history(&session.history);
            let setup = TrialSetup {
                tree,
                store: repo.store().clone(),
                executor: exec,
                time: VT,
                metric: "score".into(),
            };
            let p = run_trials(&setup, SearchMethod::Prioritized, C7_TRIALS, seed).unwrap();
            let n = p.positions.len();
            early += p.mean_score(0..n / 2);
            late += p.mean_score(n - n / 2..n);
            let r = run_trials(&setup, SearchMethod::Random, C7_TRIALS, seed).unwrap();
            let overall = r.mean_score(0..n);
            for pos in &r.positions {
                worst_random = worst_random.max((pos.avg_score - overall).abs() / overall);
            }
        }
        let k = C7_INSTANCES as f64;
        let (early, late) = (early / k, late / k);
        assert!(early > late, "{early} vs {late}");
        assert!(worst_random <= C7_RANDOM_REL_TOLERANCE, "{worst_random}");
        let elapsed = start.elapsed();
        assert!(elapsed < C7_LIMIT, "{elapsed:?}");
        format!(
            "early {early:.4} > late {late:.4}, random max deviation {:.2}%, {elapsed:.2?}",
            worst_random * 100.0
        )
    });
}

#[test]
fn criterion_8_schema_hash_and_versions() {
    criterion(8, "schema hash invariance and version steps", || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz0123456789_".chars().collect();
        for _ in 0..C8_HEADER_SETS {
            let k = rng.gen_range(1..=8);
            let mut headers: Vec<String> = Vec::new();
            while headers.len() < k {
                let len = rng.gen_range(1..=8);
                let h: String = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
                if !headers.contains(&h) {
                    headers.push(h);
                }
            }
            let mut variant: Vec<String> = headers
                .iter()
                .map(|h| {
                    let cased: String = h
                        .chars()
                        .map(|c| if rng.gen_bool(0.5) { c.to_ascii_uppercase() } else { c })
                        .collect();
                    let pad = |rng: &mut ChaCha8Rng| [" ", "\t", "  ", ""][rng.gen_range(0..4)];
                    format!("{}{cased}{}", pad(&mut rng), pad(&mut rng))
                })
                .collect();
            variant.shuffle(&mut rng);
            assert_eq!(schema_hash(&headers), schema_hash(&variant), "{headers:?} vs {variant:?}");
            let mut extended = headers.clone();
            extended.push("zz_extra".into());
            assert_ne!(schema_hash(&headers), schema_hash(&extended));
        }

        let d0 = schema_hash(&["age", "sex"]);
        let d1 = schema_hash(&["age", "sex", "bp"]);
        let v0 = SemanticVersion::initial(MASTER, d0);
        let v1 = next_version(&v0, false, d0, MASTER).unwrap();
        let v2 = next_version(&v1, true, d1, MASTER).unwrap();
        let seq: Vec<String> = [&v0, &v1, &v2].iter().map(|v| v.to_string()).collect();
        assert_eq!(seq, ["0.0", "0.1", "1.0"]);
        assert!(next_version(&v1, false, d1, MASTER).is_err());
        format!("{C8_HEADER_SETS} header sets, {}", seq.join(" -> "))
    });
}

struct Counting {
    inner: StubExecutor,
    calls: AtomicU64,
}

impl Executor for Counting {
    fn execute(&self, request: &ExecRequest<'_>) -> Result<ExecOutcome, ExecError> {
        self.calls.fetch_add(1, AtomicOrdering::SeqCst);
        self.inner.execute(request)
    }
}

#[test]
fn criterion_9_fast_forward_merge() {
    criterion(9, "fast-forward merge", || {
        let exec = Arc::new(Counting {
            inner: StubExecutor::new(),
            calls: AtomicU64::new(0),
        });
        let (mut repo, _, _) = scenario::fast_forward(exec.clone(), VT).unwrap();
        let before = exec.calls.load(AtomicOrdering::SeqCst);
        let head = repo.head_commit(MASTER).unwrap();
        let dev = repo.head_commit(DEV).unwrap();
        assert!(repo.is_fast_forward(MASTER, DEV).unwrap());
        let commit = repo.fast_forward_merge(MASTER, DEV).unwrap();
        assert_eq!(exec.calls.load(AtomicOrdering::SeqCst), before);
        assert_eq!(commit.parents, [head.id, dev.id]);
        assert_eq!(ids(commit.pipeline.bindings()), ids(dev.pipeline.bindings()));
        let labels: Vec<String> = commit.pipeline.bindings().iter().map(|c| c.version.to_string()).collect();
        assert_eq!(labels, ["0.0", "dev@0.1", "dev@1.0", "dev@0.3"]);
        assert_eq!(repo.head_commit(MASTER).unwrap().id, commit.id);

        let (mut diverged, _, _) = scenario::diverged(stub(), VT).unwrap();
        assert!(diverged.fast_forward_merge(MASTER, DEV).is_err());
        format!("2 parents, 0 invocations, bindings {}", labels.join(" "))
    });
}
