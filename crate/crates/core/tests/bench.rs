use std::sync::Arc;

use pipevc::bench::linear::{BASELINE, VERSIONED};
use pipevc::bench::{linear_experiment, nonlinear_experiment, random_instance, HistoryConfig, InstanceConfig};
use pipevc::exec::{StubExecutor, TimeMode};
use pipevc::mergex::{MergeSession, Strategy};
use pipevc::model::MASTER;

fn stub() -> Arc<StubExecutor> {
    Arc::new(StubExecutor::new())
}

#[test]
fn linear_versioned_never_costs_more() {
    let cfg = HistoryConfig::default();
    let r = linear_experiment(&cfg, stub(), TimeMode::DEFAULT_VIRTUAL).unwrap();
    let v = r.series(VERSIONED);
    let b = r.series(BASELINE);
    assert_eq!(v.len(), cfg.iterations + 1);
    for (x, y) in v.iter().zip(&b) {
        assert!(x.cet <= y.cet + 1e-12, "{x:?} {y:?}");
        assert!(x.css < y.css, "{x:?} {y:?}");
    }
    for w in v.windows(2).chain(b.windows(2)) {
        assert!(w[1].cpt() >= w[0].cpt() && w[1].css >= w[0].css);
    }
    assert!(r.baseline_executed.iter().all(|&n| n == 4));
    for u in &r.updates {
        if u.slot == "model" {
            assert_eq!(r.executed[u.iteration], 1, "{u:?}");
        }
    }
    assert!(r.to_csv().starts_with("system,iteration,cet_s,cst_s,cpt_s,css_bytes\n"));
}

#[test]
fn linear_is_reproducible() {
    let cfg = HistoryConfig {
        seed: 99,
        p_schema_change: 0.5,
        ..HistoryConfig::default()
    };
    let a = linear_experiment(&cfg, stub(), TimeMode::DEFAULT_VIRTUAL).unwrap();
    let b = linear_experiment(&cfg, stub(), TimeMode::DEFAULT_VIRTUAL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_from_toml() {
    let cfg = HistoryConfig::from_toml("iterations = 3\nseed = 5\n[costs]\nmodel_ms = 80\n").unwrap();
    assert_eq!(cfg.iterations, 3);
    assert_eq!(cfg.costs.model_ms, 80);
    assert_eq!(cfg.costs.preproc_ms, 200);
    assert!(HistoryConfig::from_toml("p_update_model = 0.9\n").is_err());
    assert!(HistoryConfig::from_toml("bogus = 1\n").is_err());
}

#[test]
fn nonlinear_strategies_agree() {
    let cfg = HistoryConfig {
        dataset_bytes: 16 << 10,
        p_schema_change: 0.3,
        ..HistoryConfig::default()
    };
    let r = nonlinear_experiment(&cfg, "score", stub(), TimeMode::DEFAULT_VIRTUAL).unwrap();
    assert_eq!(r.merges.len(), 3);
    let w: Vec<_> = r.merges.iter().map(|m| m.winner.clone()).collect();
    assert!(w.windows(2).all(|p| p[0] == p[1]));
    let inv: Vec<_> = r.merges.iter().map(|m| m.invocations).collect();
    assert!(inv[2] <= inv[1] && inv[1] <= inv[0], "{inv:?}");
    assert_eq!(r.to_csv().lines().count(), 4);
}

#[test]
fn random_instances_respect_caps() {
    for seed in 0..20 {
        let cfg = InstanceConfig {
            seed,
            ..InstanceConfig::default()
        };
        let inst = random_instance(&cfg, stub(), TimeMode::DEFAULT_VIRTUAL).unwrap();
        let s = MergeSession::prepare(&inst.repo, MASTER, "dev").unwrap();
        assert!(s.spaces.sizes().iter().all(|&n| (1..=4).contains(&n)), "{:?}", s.spaces.sizes());
        assert!(!inst.repo.is_fast_forward(MASTER, "dev").unwrap());
        let _ = Strategy::Pcpr;
    }
}
