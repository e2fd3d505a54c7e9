use super::*;
use crate::scm::builtin;
use crate::scope::parse_scopes;

fn quick(b: &Benchmark, kind: OptimizerKind, iterations: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_benchmark(b, kind);
    cfg.iterations = iterations;
    cfg.seed = seed;
    cfg.fit = FitConfig { restarts: 2, refine: 1, max_iters: 10 };
    cfg.suggest.candidates = 64;
    cfg.suggest.perturbations = 8;
    cfg
}

/// `"X1|C; X2|C"` as a scope.
fn scope(text: &str) -> MixedPolicyScope {
    let lines: Vec<String> = text.split(';').map(|p| format!("pair {}", p.trim())).collect();
    parse_scopes(&lines.join("\n")).unwrap().remove(0)
}

#[test]
fn optimizer_names_round_trip() {
    for k in OptimizerKind::ALL {
        assert_eq!(k.name().parse::<OptimizerKind>().unwrap(), k);
    }
    assert!("bo".parse::<OptimizerKind>().is_err());
}

#[test]
fn refit_schedule() {
    let r = RefitSchedule::default();
    assert!(r.due(1) && r.due(100) && r.due(105));
    assert!(!r.due(101) && !r.due(104));
}

#[test]
fn global_scopes_of_benchmarks() {
    let toy = builtin("toy").unwrap();
    assert_eq!(global_scope(&toy.graph).unwrap(), scope("X1|C; X2|C"));
    let psa = builtin("psa_heterogeneous").unwrap();
    assert_eq!(global_scope(&psa.graph).unwrap(), scope("Aspirin|Age,BMI; Statin|Age,BMI"));
    for name in crate::scm::BUILTIN_NAMES {
        let b = builtin(name).unwrap();
        let s = global_scope(&b.graph).unwrap();
        assert!(validate_mps(&b.graph, &s).unwrap(), "{name}");
    }
}

#[test]
fn scope_resolution() {
    let toy = builtin("toy").unwrap();
    let cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cocabo);
    assert_eq!(resolve_scopes(&cfg).unwrap(), load_fixture("toy_pomps").unwrap());
    let cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cobo);
    assert_eq!(resolve_scopes(&cfg).unwrap().len(), 1);

    let mut cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cabo);
    cfg.scopes = Some(ScopeSource::Fixture("toy_pomps".into()));
    assert!(matches!(resolve_scopes(&cfg), Err(EngineError::ContextualScope(_))));

    cfg.scopes = Some(ScopeSource::Explicit(ScopeSet::singleton(scope("X2|X1,C"), ScopeOrigin::User)));
    cfg.optimizer = OptimizerKind::Cocabo;
    assert!(resolve_scopes(&cfg).is_ok());
    cfg.scopes = Some(ScopeSource::Explicit(ScopeSet::singleton(scope("X1|X2"), ScopeOrigin::User)));
    assert!(matches!(resolve_scopes(&cfg), Err(EngineError::InvalidScope(_))));

    let large = builtin("large_system").unwrap();
    let cfg = ExperimentConfig::for_benchmark(&large, OptimizerKind::Cabo);
    assert!(resolve_scopes(&cfg).is_err());
}

#[test]
fn config_validation() {
    let toy = builtin("toy").unwrap();
    let mut cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cocabo);
    cfg.iterations = 0;
    assert!(run(&cfg).is_err());
    cfg.iterations = 5;
    cfg.cabo_epsilon = 1.5;
    assert!(run(&cfg).is_err());
    cfg.cabo_epsilon = 0.1;
    cfg.bandit.exploration_c = 0.0;
    assert!(run(&cfg).is_err());
    let cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cabo);
    assert!(run_cocabo(&cfg).is_err());
}

#[test]
fn cocabo_runs_are_deterministic() {
    let toy = builtin("toy").unwrap();
    let cfg = quick(&toy, OptimizerKind::Cocabo, 20, 7);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    let c = run(&quick(&toy, OptimizerKind::Cocabo, 20, 8)).unwrap();
    assert_ne!(a.records, c.records);
    assert_eq!(a.records.len(), 20);
    assert_eq!(a.scopes, load_fixture("toy_pomps").unwrap().canonical_names());
    let bandit = a.bandit.as_ref().unwrap();
    assert_eq!(bandit.total_pulls(), 20);
    for (i, arm) in bandit.arms().iter().enumerate() {
        let n = a.records.iter().filter(|r| r.scope_id == Some(i)).count();
        assert_eq!(arm.pulls as usize, n);
    }
}

#[test]
fn records_respect_scopes_and_domains() {
    let toy = builtin("toy").unwrap();
    let t = run(&quick(&toy, OptimizerKind::Cocabo, 15, 3)).unwrap();
    let set = load_fixture("toy_pomps").unwrap();
    for r in &t.records {
        let s = set.get(r.scope_id.unwrap()).unwrap();
        let xs: Vec<&str> = r.intervention.keys().map(String::as_str).collect();
        assert_eq!(xs, s.intervened().collect::<Vec<_>>());
        for (x, v) in &r.intervention {
            assert!(toy.scm.domain(x).unwrap().contains(*v));
            assert_eq!(r.values[x], *v);
        }
        assert_eq!(r.target_value, r.values["Y"]);
        assert!(!r.clipped);
    }
}

#[test]
fn cobo_uses_one_scope() {
    let psa = builtin("psa_heterogeneous").unwrap();
    let t = run(&quick(&psa, OptimizerKind::Cobo, 12, 1)).unwrap();
    assert_eq!(t.scopes.len(), 1);
    assert!(t.bandit.is_none());
    assert!(t.records.iter().all(|r| r.scope_id == Some(0)));
    assert!(t.records.iter().all(|r| r.context.contains_key("Age") && r.context.contains_key("BMI")));
}

#[test]
fn cabo_passive_draws_have_no_scope() {
    let toy = builtin("toy").unwrap();
    let mut cfg = quick(&toy, OptimizerKind::Cabo, 40, 2);
    cfg.cabo_epsilon = 0.5;
    let t = run(&cfg).unwrap();
    let passive = t.records.iter().filter(|r| r.scope_id.is_none()).count();
    assert!(passive > 5 && passive < 35, "{passive}");
    for r in t.records.iter().filter(|r| r.scope_id.is_none()) {
        assert!(r.intervention.is_empty());
    }
    // Every arm is tried before any is revisited.
    let first: Vec<usize> = t.records.iter().filter_map(|r| r.scope_id).take(t.scopes.len()).collect();
    assert_eq!(first, (0..t.scopes.len()).collect::<Vec<_>>());
    assert_eq!(t, run(&cfg).unwrap());
}

#[test]
fn cabo_without_exploration_never_observes() {
    let toy = builtin("toy").unwrap();
    let mut cfg = quick(&toy, OptimizerKind::Cabo, 10, 2);
    cfg.cabo_epsilon = 0.0;
    let t = run(&cfg).unwrap();
    assert!(t.records.iter().all(|r| r.scope_id.is_some()));
}

#[test]
fn staged_decisions_follow_contexts() {
    // X2 reads X1, which is itself decided by the same policy.
    let toy = builtin("toy").unwrap();
    let mut cfg = quick(&toy, OptimizerKind::Cocabo, 12, 4);
    let s = scope("X1|C; X2|X1,C");
    assert!(validate_mps(&toy.graph, &s).unwrap());
    cfg.scopes = Some(ScopeSource::Explicit(ScopeSet::singleton(s, ScopeOrigin::User)));
    let t = run(&cfg).unwrap();
    for r in &t.records {
        assert_eq!(r.intervention.len(), 2);
        assert!(r.context.contains_key("X1"));
        assert_eq!(r.context["X1"], r.intervention["X1"]);
    }
}

#[test]
fn scope_optimizer_input_layout() {
    let toy = builtin("toy").unwrap();
    let cfg = ExperimentConfig::for_benchmark(&toy, OptimizerKind::Cocabo);
    let opt = ScopeOptimizer::new(scope("X2|X1,C"), &toy.scm, &cfg, stream(0, 16)).unwrap();
    assert_eq!(opt.interventions(), ["X2"]);
    assert_eq!(opt.contexts(), ["C", "X1"]);
    assert!(opt.model().is_empty());
    assert_eq!(opt.model().dim(), 3);
}

#[test]
fn minimisation_feeds_negated_rewards() {
    let psa = builtin("psa_homogeneous").unwrap();
    let t = run(&quick(&psa, OptimizerKind::Cocabo, 10, 5)).unwrap();
    let b = t.bandit.unwrap();
    let total: f64 = b.arms().iter().map(|a| a.reward_sum).sum();
    let raw: f64 = t.records.iter().map(|r| r.target_value).sum();
    assert!((total + raw).abs() < 1e-9);
}
