mod common;

use alphabp::convergence::{
    build_m_matrix, certify, contraction_check, g_aux, h_aux, largest_singular_value,
    logratio_to_messages, messages_to_logratio, theta_from_ising, z_trajectory, z_update,
    LogRatioState,
};
use alphabp::divergence::{alpha_divergence, kl_divergence};
use alphabp::inference::{
    alpha_bp_step, bp_step, damped_bp_step, exact_map, exact_marginals, init_messages,
    init_messages_noisy, mean_field_free_energy, run_alpha_bp, trw_step, AlphaAssignment,
    EdgeAppearance, RunConfig,
};
use alphabp::mimo::{mimo_posterior_mrf, mmse_estimate, LinearModel};
use alphabp::model::{ising_to_mrf, mrf_log_score, DiscreteDistribution};
use alphabp::randgen::{erdos_renyi, sample_ising, GraphSpec, PotentialSpec};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn distribution(v: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::new(v.to_vec()).normalized()
}

fn prob_vec(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairwise_lookup_is_symmetric_and_positive(seed in any::<u64>(), n in 2usize..7, k in 2usize..4) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.6);
        let mrf = random_mrf(&mut r, g, k, 3.0);
        for &(s, t) in mrf.graph().edges() {
            for a in 0..k {
                for b in 0..k {
                    prop_assert_eq!(mrf.pairwise(s, t, a, b), mrf.pairwise(t, s, b, a));
                    prop_assert!(mrf.pairwise(s, t, a, b) > 0.0);
                }
            }
        }
        for s in 0..n {
            for x in 0..k {
                prop_assert!(mrf.unary(s, x) > 0.0);
            }
        }
    }

    #[test]
    fn alpha_divergence_is_a_divergence(
        p in prob_vec(4),
        q in prob_vec(4),
        ai in 0usize..5,
    ) {
        let alpha = [-0.5, 0.3, 0.5, 0.8, 1.5][ai];
        let (p, q) = (distribution(&p), distribution(&q));
        prop_assert!(alpha_divergence(&p, &p, alpha).unwrap().abs() < 1e-12);
        prop_assert!(alpha_divergence(&p, &q, alpha).unwrap() >= -1e-12);
    }

    #[test]
    fn alpha_divergence_limits(p in prob_vec(3), q in prob_vec(3), sign in prop::bool::ANY) {
        let (p, q) = (distribution(&p), distribution(&q));
        let eps = if sign { 1e-4 } else { -1e-4 };
        let kl_pq = kl_divergence(&p, &q).unwrap();
        let kl_qp = kl_divergence(&q, &p).unwrap();
        prop_assert!((alpha_divergence(&p, &q, 1.0 + eps).unwrap() - kl_pq).abs() < 1e-3);
        prop_assert!((alpha_divergence(&p, &q, eps).unwrap() - kl_qp).abs() < 1e-3);
    }

    #[test]
    fn ising_score_is_the_quadratic_form(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let model = random_ising(&mut r, g, 0.8);
        let mrf = ising_to_mrf(&model);
        let mut offset = None;
        for x in assignments(n, 2) {
            let s = spins(&x);
            let diff = mrf_log_score(&mrf, &s).unwrap() - model.energy_exponent(&s);
            let c = *offset.get_or_insert(diff);
            prop_assert!((diff - c).abs() < 1e-10);
        }
    }

    #[test]
    fn messages_and_beliefs_are_normalized(seed in any::<u64>(), n in 2usize..9, k in 2usize..4) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let mrf = random_mrf(&mut r, g, k, 1.5);
        let alphas = AlphaAssignment::uniform(mrf.graph(), r.random_range(0.2..1.8));
        let mut state = init_messages_noisy(&mrf, seed);
        for _ in 0..5 {
            state = alpha_bp_step(&mrf, &alphas, &state).unwrap();
            for d in 0..state.num_messages() {
                let m = state.message(d);
                prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(m.iter().all(|&v| v > 0.0));
            }
        }
        let config = RunConfig { max_iterations: 30, ..RunConfig::default() };
        let result = run_alpha_bp(&mrf, &alphas, &config).unwrap();
        for b in &result.marginals {
            prop_assert!((b.sum() - 1.0).abs() < 1e-12);
            prop_assert!(b.values().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn alpha_one_is_bp(seed in any::<u64>(), n in 2usize..10, k in 2usize..4) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let mrf = random_mrf(&mut r, g, k, 2.0);
        let state = init_messages_noisy(&mrf, seed ^ 1);
        let a = alpha_bp_step(&mrf, &AlphaAssignment::uniform(mrf.graph(), 1.0), &state).unwrap();
        let b = bp_step(&mrf, &state).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn unit_trw_weights_are_bp(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let mrf = random_mrf(&mut r, g, 2, 2.0);
        let mu = EdgeAppearance::uniform(mrf.graph(), 1.0).unwrap();
        let state = init_messages_noisy(&mrf, seed ^ 2);
        let a = trw_step(&mrf, &mu, &state).unwrap();
        let b = bp_step(&mrf, &state).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn damping_keeps_fixed_points(seed in any::<u64>(), n in 2usize..9, gamma in 0.05f64..0.95) {
        let mut r = rng(seed);
        let g = random_tree(&mut r, n);
        let mrf = random_mrf(&mut r, g, 2, 1.0);
        let mut state = init_messages(&mrf);
        for _ in 0..2 * n + 5 {
            state = bp_step(&mrf, &state).unwrap();
        }
        let next = bp_step(&mrf, &state).unwrap();
        prop_assume!(next.max_abs_diff(&state) < 1e-12);
        let damped = damped_bp_step(&mrf, gamma, &state).unwrap();
        prop_assert!(damped.max_abs_diff(&state) < 1e-10);
    }

    #[test]
    fn tree_bp_is_exact(seed in any::<u64>(), n in 2usize..12, k in 2usize..4) {
        let mut r = rng(seed);
        let g = random_tree(&mut r, n);
        let mrf = random_mrf(&mut r, g, k, 1.0);
        let result = run_alpha_bp(&mrf, &AlphaAssignment::uniform(mrf.graph(), 1.0), &RunConfig {
            tolerance: 1e-13,
            ..RunConfig::default()
        }).unwrap();
        let exact = brute_marginals(&mrf);
        for (a, b) in result.marginals.iter().zip(&exact) {
            for (x, y) in a.values().iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exact_marginals_match_brute_force(seed in any::<u64>(), n in 1usize..7, k in 2usize..4) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.6);
        let mrf = random_mrf(&mut r, g, k, 1.5);
        let exact = exact_marginals(&mrf).unwrap();
        for (a, b) in exact.iter().zip(brute_marginals(&mrf)) {
            for (x, y) in a.values().iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_map_maximizes_score(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let mrf = random_mrf(&mut r, g, 2, 2.0);
        let best = mrf_log_score(&mrf, &exact_map(&mrf).unwrap()).unwrap();
        for x in assignments(n, 2) {
            prop_assert!(best >= mrf_log_score(&mrf, &spins(&x)).unwrap() - 1e-12);
        }
    }

    #[test]
    fn mean_field_energy_never_rises(seed in any::<u64>(), n in 2usize..8) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.6);
        let mrf = random_mrf(&mut r, g, 2, 1.5);
        // replay the coordinate sweeps and evaluate the free energy after each
        let mut q: Vec<DiscreteDistribution> = (0..n).map(|_| DiscreteDistribution::uniform(2)).collect();
        let mut last = mean_field_free_energy(&mrf, &q);
        for _ in 0..20 {
            for s in 0..n {
                let logs: Vec<f64> = (0..2)
                    .map(|x| {
                        mrf.log_unary(s, x)
                            + mrf.graph().neighbors(s).iter().map(|&t| {
                                (0..2).map(|xt| q[t].values()[xt] * mrf.log_pairwise(s, t, x, xt)).sum::<f64>()
                            }).sum::<f64>()
                    })
                    .collect();
                q[s] = DiscreteDistribution::from_log_weights(&logs);
            }
            let now = mean_field_free_energy(&mrf, &q);
            prop_assert!(now <= last + 1e-10);
            last = now;
        }
    }

    #[test]
    fn z_dynamics_track_messages(seed in any::<u64>(), n in 2usize..12, ai in 0usize..4) {
        let alpha = [0.3, 0.5, 1.0, 1.5][ai];
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.4);
        let model = random_ising(&mut r, g, 0.4);
        let mrf = ising_to_mrf(&model);
        let theta = theta_from_ising(&model);
        let alphas = AlphaAssignment::uniform(mrf.graph(), alpha);
        let mut msgs = init_messages_noisy(&mrf, seed);
        let mut z = messages_to_logratio(&msgs).unwrap();
        for _ in 0..20 {
            msgs = alpha_bp_step(&mrf, &alphas, &msgs).unwrap();
            z = z_update(&theta, &alphas, mrf.graph(), &z).unwrap();
            let from_msgs = messages_to_logratio(&msgs).unwrap();
            for (a, b) in z.z.iter().zip(&from_msgs.z) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn g_is_the_derivative_of_h_and_bounded(mu in -30.0f64..30.0, kappa in -6.0f64..6.0) {
        let h = 1e-6;
        let fd = (h_aux(mu + h, kappa) - h_aux(mu - h, kappa)) / (2.0 * h);
        prop_assert!((fd - g_aux(mu, kappa)).abs() < 1e-6);
        // κ = 2αθ, so the bound reads tanh|κ/2|
        prop_assert!(g_aux(mu, kappa).abs() <= (kappa / 2.0).abs().tanh() + 1e-15);
    }

    #[test]
    fn contraction_holds_on_traces(seed in any::<u64>(), n in 2usize..10, alpha in 0.1f64..1.9) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.5);
        let model = random_ising(&mut r, g, 1.0);
        let theta = theta_from_ising(&model);
        let alphas = AlphaAssignment::uniform(model.graph(), alpha);
        let start = LogRatioState {
            z: (0..model.graph().num_directed()).map(|_| r.random_range(-3.0..3.0)).collect(),
        };
        let trace = z_trajectory(&theta, &alphas, model.graph(), start, 30).unwrap();
        let report = contraction_check(&theta, &alphas, model.graph(), &trace).unwrap();
        prop_assert_eq!(report.violations, 0);
    }

    #[test]
    fn certified_models_have_one_fixed_point(seed in any::<u64>(), n in 3usize..10) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.4);
        let model = random_ising(&mut r, g, 0.15);
        let theta = theta_from_ising(&model);
        let alphas = AlphaAssignment::uniform(model.graph(), 0.7);
        let cert = certify(&theta, &alphas, model.graph()).unwrap();
        prop_assume!(cert.theorem1_holds);
        let mut ends: Vec<Vec<f64>> = Vec::new();
        for _ in 0..10 {
            let start = LogRatioState {
                z: (0..model.graph().num_directed()).map(|_| r.random_range(-5.0..5.0)).collect(),
            };
            let trace = z_trajectory(&theta, &alphas, model.graph(), start, 600).unwrap();
            ends.push(trace.last().unwrap().z.clone());
        }
        for e in &ends[1..] {
            let d: f64 = e.iter().zip(&ends[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d < 1e-6);
        }
    }

    #[test]
    fn certified_residuals_decay_geometrically(seed in any::<u64>(), n in 3usize..12) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 0.4);
        let model = random_ising(&mut r, g, 0.2);
        let theta = theta_from_ising(&model);
        let alphas = AlphaAssignment::uniform(model.graph(), 0.6);
        let cert = certify(&theta, &alphas, model.graph()).unwrap();
        prop_assume!(cert.theorem1_holds);
        let start = LogRatioState {
            z: (0..model.graph().num_directed()).map(|_| r.random_range(-2.0..2.0)).collect(),
        };
        let trace = z_trajectory(&theta, &alphas, model.graph(), start, 60).unwrap();
        let norms: Vec<f64> = trace
            .windows(2)
            .map(|w| w[1].z.iter().zip(&w[0].z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect();
        for w in norms.windows(2) {
            // below ~1e-13 the differences are rounding noise
            prop_assert!(w[1] <= (cert.lambda_star + 1e-6) * w[0] + 1e-13);
        }
    }

    #[test]
    fn logratio_round_trip(z in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let state = LogRatioState { z: z.clone() };
        let back = messages_to_logratio(&logratio_to_messages(&state)).unwrap();
        for (a, b) in back.z.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_sigma_free(seed in any::<u64>(), gamma in 0.0f64..1.0) {
        let gs = GraphSpec { n: 12, gamma, seed };
        let g1 = erdos_renyi(&gs).unwrap();
        prop_assert_eq!(&g1, &erdos_renyi(&gs).unwrap());
        let a = sample_ising(&g1, &PotentialSpec { sigma: 0.3, seed }).unwrap();
        let b = sample_ising(&g1, &PotentialSpec { sigma: 0.3, seed }).unwrap();
        prop_assert_eq!(a.j(), b.j());
        prop_assert_eq!(a.b(), b.b());
    }

    #[test]
    fn posterior_matches_likelihood(seed in any::<u64>(), n in 1usize..7, sigma in 0.2f64..2.0) {
        let mut r = rng(seed);
        let h = DMatrix::from_fn(n, n, |_, _| alphabp::randgen::standard_normal(&mut r));
        let y = DVector::from_fn(n, |_, _| 2.0 * alphabp::randgen::standard_normal(&mut r));
        let model = LinearModel::new(h.clone(), sigma).unwrap();
        let mrf = mimo_posterior_mrf(&model, &y).unwrap();
        let mut offset = None;
        let mut best = (f64::INFINITY, Vec::new());
        for x in assignments(n, 2) {
            let s = spins(&x);
            let xv = DVector::from_iterator(n, s.iter().map(|&v| v as f64));
            let dist = (&h * &xv - &y).norm_squared();
            if dist < best.0 {
                best = (dist, s.clone());
            }
            let diff = mrf_log_score(&mrf, &s).unwrap() + dist / (2.0 * sigma * sigma);
            let c = *offset.get_or_insert(diff);
            prop_assert!((diff - c).abs() < 1e-9);
        }
        prop_assert_eq!(exact_map(&mrf).unwrap(), best.1);
    }

    #[test]
    fn mmse_solves_normal_equations(seed in any::<u64>(), n in 1usize..8, sigma in 0.1f64..2.0) {
        let mut r = rng(seed);
        let h = DMatrix::from_fn(n, n, |_, _| alphabp::randgen::standard_normal(&mut r));
        let y = DVector::from_fn(n, |_, _| alphabp::randgen::standard_normal(&mut r));
        let model = LinearModel::new(h.clone(), sigma).unwrap();
        let res = mmse_estimate(&model, &y).unwrap();
        let a = h.transpose() * &h + DMatrix::identity(n, n) * sigma * sigma;
        prop_assert!((&a * &res.mu_hat - h.transpose() * &y).amax() <= 1e-10);
        prop_assert!((&res.sigma_hat - res.sigma_hat.transpose()).amax() <= 1e-12);
        prop_assert!(res.sigma_hat.clone().symmetric_eigenvalues().min() > 0.0);
        for i in 0..n {
            let d = if (res.mu_hat[i] - 1.0).abs() < (res.mu_hat[i] + 1.0).abs() { 1 } else { -1 };
            prop_assert_eq!(res.decision[i], d);
        }
    }
}

#[test]
fn lambda_at_unit_alpha_is_the_bp_matrix() {
    // α = 1: row (t→s) has tanh|θ_ts| on every (u→t), u ≠ s, and nothing else
    let mut r = rng(5);
    let g = random_connected(&mut r, 7, 0.4);
    let model = random_ising(&mut r, g, 0.5);
    let theta = theta_from_ising(&model);
    let graph = model.graph();
    let m = build_m_matrix(&theta, &AlphaAssignment::uniform(graph, 1.0), graph).unwrap();
    let dim = graph.num_directed();
    let mut bp = vec![0.0; dim * dim];
    for (row, &(t, s)) in graph.directed_edges().iter().enumerate() {
        let w = theta.theta_edge[graph.edge_id(t, s).unwrap()].abs().tanh();
        for (col, &(u, v)) in graph.directed_edges().iter().enumerate() {
            if v == t && u != s {
                bp[row * dim + col] = w;
            }
        }
    }
    for i in 0..dim * dim {
        assert_eq!(m.get(i / dim, i % dim), bp[i]);
    }
    let oracle = DMatrix::from_row_slice(dim, dim, &bp).singular_values().max();
    assert!((largest_singular_value(&m, 1e-12).unwrap() - oracle).abs() < 1e-8);
}
