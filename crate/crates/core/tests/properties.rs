use cocabo_core::acquisition::{self, AcquisitionVector, SuggestConfig};
use cocabo_core::bandit::BanditState;
use cocabo_core::gp::{kernel, FitConfig, GpHyperparams, GpModel, InputScaling, Observation};
use cocabo_core::graph::{parse_graph, CausalGraph, VarKind, Variable};
use cocabo_core::metrics::{aggregate, regret_from_targets};
use cocabo_core::scm::DomainSpec;
use cocabo_core::scope::{enumerate_scopes, enumerate_scopes_with, parse_scopes, prune_redundant, subsumes, validate_mps, EnumerationOptions, MixedPolicyScope};
use cocabo_core::Objective;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random ADMG: edges only from lower to higher index, last node is the
/// target.
fn arb_graph() -> impl Strategy<Value = CausalGraph> {
    (3usize..7)
        .prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), n - 1),
                proptest::collection::vec(0u8..4, pairs),
                proptest::collection::vec(0u8..6, pairs),
            )
        })
        .prop_map(|(n, manip, dir, bi)| {
            let name = |i: usize| if i == n - 1 { "Y".to_string() } else { format!("V{i}") };
            let vars = (0..n).map(|i| {
                let kind = match i {
                    _ if i == n - 1 => VarKind::Target,
                    _ if manip[i] => VarKind::Manipulable,
                    _ => VarKind::Context,
                };
                Variable::new(name(i), kind)
            });
            let mut directed = Vec::new();
            let mut bidirected = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if dir[k] == 0 || (j == n - 1 && dir[k] < 2) {
                        directed.push((name(i), name(j)));
                    }
                    if bi[k] == 0 {
                        bidirected.push((name(i), name(j)));
                    }
                    k += 1;
                }
            }
            CausalGraph::new(vars, directed, bidirected).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn topological_order_respects_edges(g in arb_graph()) {
        let order = g.topological_indices().unwrap();
        let mut pos = vec![0; g.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        for v in 0..g.len() {
            for &c in g.children(v) {
                prop_assert!(pos[v] < pos[c]);
            }
        }
    }

    #[test]
    fn graph_text_round_trip(g in arb_graph()) {
        let text = g.to_text();
        prop_assert_eq!(parse_graph(&text).unwrap().to_text(), text);
    }

    #[test]
    fn enumerated_scopes_are_valid_and_stable(g in arb_graph()) {
        let set = enumerate_scopes(&g, 1);
        for s in set.iter() {
            prop_assert!(validate_mps(&g, s).unwrap());
            let once = g.mutilate(s).unwrap();
            prop_assert!(once.is_acyclic());
            prop_assert_eq!(once.mutilate(s).unwrap().to_text(), once.to_text());
            let pruned = prune_redundant(&g, s).unwrap();
            prop_assert_eq!(prune_redundant(&g, &pruned).unwrap(), pruned);
            prop_assert!(subsumes(s, s));
            let back = parse_scopes(&s.to_text()).unwrap();
            prop_assert_eq!(&back[..], core::slice::from_ref(s));
        }
    }

    #[test]
    fn single_pair_enumeration_matches_brute_force(g in arb_graph()) {
        let opts = EnumerationOptions { max_context: 2, max_pairs: Some(1) };
        let mut got = enumerate_scopes_with(&g, opts).canonical_names();
        got.sort();
        let others: Vec<&str> = (0..g.len()).filter(|&i| i != g.target_index()).map(|i| g.name(i)).collect();
        let mut want = vec![MixedPolicyScope::empty().canonical_name()];
        for x in g.names_of_kind(VarKind::Manipulable) {
            let rest: Vec<&str> = others.iter().copied().filter(|&c| c != x).collect();
            let mut contexts: Vec<Vec<&str>> = vec![vec![]];
            for (i, &a) in rest.iter().enumerate() {
                contexts.push(vec![a]);
                for &b in &rest[i + 1..] {
                    contexts.push(vec![a, b]);
                }
            }
            for ctx in contexts {
                let s = MixedPolicyScope::from_pairs([(x, ctx.as_slice())]);
                if g.mutilate(&s).unwrap().is_acyclic() {
                    want.push(prune_redundant(&g, &s).unwrap().canonical_name());
                }
            }
        }
        want.sort();
        want.dedup();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn subsumption_is_transitive(g in arb_graph()) {
        let set = enumerate_scopes(&g, 1);
        let scopes = set.scopes();
        for a in scopes {
            for b in scopes.iter().filter(|b| subsumes(a, b)) {
                for c in scopes.iter().filter(|c| subsumes(b, c)) {
                    prop_assert!(subsumes(a, c));
                }
            }
        }
    }
}

fn arb_data(n: usize, dim: usize) -> impl Strategy<Value = Vec<Observation>> {
    proptest::collection::vec(
        (proptest::collection::vec(-1.0f64..1.0, dim), -3.0f64..3.0),
        n,
    )
    .prop_map(|v| v.into_iter().map(|(z, y)| Observation { z, y }).collect())
}

fn arb_hyper(dim: usize) -> impl Strategy<Value = GpHyperparams> {
    (proptest::collection::vec(0.2f64..3.0, dim), 0.2f64..4.0, 1e-3f64..0.5).prop_map(|(l, s, n)| {
        GpHyperparams { lengthscales: l, signal_variance: s, noise_variance: n }
    })
}

fn standardise(obs: &[Observation]) -> Vec<f64> {
    let n = obs.len() as f64;
    let mean = obs.iter().map(|o| o.y).sum::<f64>() / n;
    let var = obs.iter().map(|o| (o.y - mean) * (o.y - mean)).sum::<f64>() / n;
    let sd = if obs.len() > 1 { var.sqrt().max(1e-6) } else { 1.0 };
    obs.iter().map(|o| (o.y - mean) / sd).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn posterior_matches_dense_solve(
        obs in arb_data(5, 2),
        h in arb_hyper(2),
        q in proptest::collection::vec(-1.5f64..1.5, 2),
    ) {
        let m = GpModel::condition(obs.clone(), InputScaling::identity(2), h.clone()).unwrap();
        prop_assume!(m.jitter() == 0.0);
        let n = obs.len();
        let k = DMatrix::from_fn(n, n, |i, j| {
            kernel(&h, &obs[i].z, &obs[j].z).unwrap() + if i == j { h.noise_variance } else { 0.0 }
        });
        let ks = DVector::from_fn(n, |i, _| kernel(&h, &obs[i].z, &q).unwrap());
        let ys = DVector::from_vec(standardise(&obs));
        let lu = k.lu();
        let a = lu.solve(&ys).unwrap();
        let v = lu.solve(&ks).unwrap();
        let mu = ks.dot(&a);
        let var = h.signal_variance - ks.dot(&v);
        let (mu2, var2) = m.posterior_standardised(&q).unwrap();
        prop_assert!((mu - mu2).abs() <= 1e-8, "{mu} {mu2}");
        prop_assert!((var.max(0.0) - var2).abs() <= 1e-8, "{var} {var2}");
        prop_assert!(var2 >= 0.0 && var2 <= h.signal_variance + 1e-6);
    }

    #[test]
    fn gram_is_positive_semidefinite(obs in arb_data(8, 3), h in arb_hyper(3)) {
        let n = obs.len();
        let k = DMatrix::from_fn(n, n, |i, j| kernel(&h, &obs[i].z, &obs[j].z).unwrap());
        let min = k.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-8, "{min}");
    }

    #[test]
    fn affine_targets_give_affine_posteriors(
        obs in arb_data(6, 2),
        h in arb_hyper(2),
        a in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
        b in -5.0f64..5.0,
        q in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let moved: Vec<Observation> =
            obs.iter().map(|o| Observation { z: o.z.clone(), y: a * o.y + b }).collect();
        let m = GpModel::condition(obs, InputScaling::identity(2), h.clone()).unwrap();
        let m2 = GpModel::condition(moved, InputScaling::identity(2), h).unwrap();
        prop_assume!(m.y_std() > 1e-3);
        let (mu, sd) = m.posterior(&q).unwrap();
        let (mu2, sd2) = m2.posterior(&q).unwrap();
        prop_assert!((a * mu + b - mu2).abs() <= 1e-6 * (1.0 + mu2.abs()));
        prop_assert!((a.abs() * sd - sd2).abs() <= 1e-6 * (1.0 + sd2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitting_never_lowers_the_likelihood(obs in arb_data(12, 2), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scaling = InputScaling::identity(2);
        let m = GpModel::fit(obs.clone(), scaling.clone(), &FitConfig::default(), None, &mut rng).unwrap();
        let default = GpModel::condition(obs, scaling, GpHyperparams::default_for(2)).unwrap();
        prop_assert!(m.log_marginal_likelihood() >= default.log_marginal_likelihood() - 1e-9);
    }

    #[test]
    fn suggestions_are_in_domain_and_non_dominated(obs in arb_data(6, 2), seed in any::<u64>()) {
        let domains = [DomainSpec::continuous(-1.0, 1.0)];
        let m = GpModel::condition(obs, InputScaling::identity(2), GpHyperparams::default_for(2)).unwrap();
        let cfg = SuggestConfig { candidates: 64, perturbations: 8, ..SuggestConfig::default() };
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let s = acquisition::suggest(&m, &[0.3], &domains, &[None], Objective::Maximise, &cfg, &mut rng.clone()).unwrap();
        prop_assert!(domains[0].contains(s.x[0]));
        let anchor = acquisition::incumbent(&m, Objective::Maximise).map(|i| m.observations()[i].z[..1].to_vec());
        let batch = acquisition::candidates(&domains, &[None], anchor.as_deref(), &cfg, &mut rng.clone()).unwrap();
        prop_assert_eq!(&batch.points[s.index], &s.x);
        let best = m.observations().iter().map(|o| o.y).fold(f64::NEG_INFINITY, f64::max);
        let acq: Vec<AcquisitionVector> = batch
            .points
            .iter()
            .map(|p| acquisition::evaluate(&m, p, &[0.3], best, cfg.beta).unwrap())
            .collect();
        prop_assert!(acq.iter().all(|a| !a.dominates(&acq[s.index])));
        prop_assert!(acq.iter().all(|a| a.ei >= 0.0 && (0.0..=1.0).contains(&a.pi)));
    }
}

fn run_bandit(rewards: &[[f64; 3]], map: impl Fn(f64) -> f64) -> Vec<usize> {
    let mut b = BanditState::new(3, 2f64.sqrt()).unwrap();
    rewards
        .iter()
        .map(|r| {
            let arm = b.select();
            b.update(arm, map(r[arm])).unwrap();
            arm
        })
        .collect()
}

proptest! {
    #[test]
    fn bandit_selection_is_affine_invariant(
        rewards in proptest::collection::vec([-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0], 1..200),
        a in 0.01f64..100.0,
        b in -50.0f64..50.0,
    ) {
        prop_assert_eq!(run_bandit(&rewards, |y| y), run_bandit(&rewards, |y| a * y + b));
    }

    #[test]
    fn bandit_counts_are_consistent(arms in 1usize..6, pulls in 0usize..100, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BanditState::new(arms, 1.0).unwrap();
        for _ in 0..pulls {
            let arm = b.select();
            prop_assert!(arm < arms);
            b.update(arm, rng.random()).unwrap();
        }
        prop_assert_eq!(b.total_pulls(), b.arms().iter().map(|a| a.pulls).sum::<u64>());
        if pulls >= arms {
            prop_assert!(b.arms().iter().all(|a| a.pulls >= 1));
        }
    }

    #[test]
    fn normalised_regret_matches_prefix_sums(ys in proptest::collection::vec(-5.0f64..5.0, 1..300), mu in -2.0f64..2.0) {
        let r = regret_from_targets(&ys, mu, Objective::Minimise).unwrap();
        let mut prefix = 0.0;
        for (t, y) in ys.iter().enumerate() {
            prefix += mu - y;
            prop_assert!((r.normalised[t] - prefix / (t + 1) as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn aggregation_ignores_seed_order(mut v in proptest::collection::vec(-1.0f64..1.0, 1..20), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let before = aggregate(&v);
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&v), before);
    }
}
