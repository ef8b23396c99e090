mod common;

use common::*;
use ewa_core::influence::{
    comparative_statics_probe, influence_report, linearized_solution, neutral_stability, predict_coordination,
    spectral_decomposition, InfluenceConfig, Prediction,
};
use ewa_core::ode::integrate;
use ewa_core::rng::CounterRng;
use ewa_core::{BehavioralParams, EwaSystem, Graph, IntegrationConfig, PayoffMatrix, TerminalStatus};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn symmetric_system(max_n: usize) -> impl Strategy<Value = EwaSystem> {
    system_with(symmetric_payoff(), max_n)
}

/// Symmetric systems with a large enough accuracy that the neutral state is
/// usually unstable.
fn excitable_system(max_n: usize) -> impl Strategy<Value = EwaSystem> {
    (connected_graph(3, max_n), symmetric_payoff()).prop_flat_map(|(g, p)| {
        let n = g.n();
        (
            proptest::collection::vec(0.2f64..1.5, n),
            proptest::collection::vec(1.0f64..4.0, n),
            proptest::collection::vec(0.0f64..=1.0, n),
        )
            .prop_map(move |(psi, lambda, eta)| {
                EwaSystem::new(g.clone(), p, BehavioralParams::new(psi, lambda, eta)).unwrap()
            })
    })
}

fn unit_vector(rng: &mut CounterRng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let s = norm(&v);
    v.iter().map(|x| x / s).collect()
}

#[test]
fn homogeneous_belief_learning_reduces_to_centrality() {
    let mut rng = CounterRng::new(11);
    for k in 0..40 {
        let n = 3 + k % 10;
        let g = Graph::erdos_renyi(n, 0.4, k as u64, true, 1000).unwrap();
        let (psi, lambda) = (rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0));
        let (h, l) = (rng.uniform(0.5, 3.0), rng.uniform(-3.0, 0.4));
        let sys = EwaSystem::new(g.clone(), PayoffMatrix::symmetric(h, l), BehavioralParams::uniform(n, psi, lambda, 1.0))
            .unwrap();
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        let c = g.eigenvector_centrality(1e-13, 1_000_000).unwrap();
        let expected = -psi + lambda * (h - l) / 2.0 * c.kappa;
        assert!((r.kappa1 - expected).abs() < 1e-9, "{} vs {expected}", r.kappa1);
        let total: f64 = c.weights.iter().sum();
        for (x, w) in r.xi.iter().zip(&c.weights) {
            assert!((x - w / total).abs() < 1e-8);
        }
        assert_eq!(neutral_stability(&r), c.kappa < 2.0 * psi / (lambda * (h - l)));
    }
}

#[test]
fn shrinking_payoff_gap_stabilises() {
    let g = Graph::star(6);
    let mut last = f64::INFINITY;
    for gap in [2.0, 1.0, 0.1, 1e-3] {
        let sys = EwaSystem::new(g.clone(), PayoffMatrix::symmetric(gap, 0.0), BehavioralParams::uniform(6, 0.5, 2.0, 0.5))
            .unwrap();
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        assert!(r.kappa1 < last);
        last = r.kappa1;
    }
    assert!(last < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn report_matches_dense_eigensolver(sys in symmetric_system(12)) {
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        let j = sys.jacobian(&vec![0.0; sys.n()], 0.0);
        let mut ev: Vec<f64> = j.complex_eigenvalues().iter().map(|c| c.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        prop_assert!((r.kappa1 - ev[0]).abs() < 1e-9);
        if !r.subdominant_eigenvalues.is_empty() {
            for (a, b) in r.subdominant_eigenvalues.iter().zip(&ev[1..]) {
                prop_assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", r.subdominant_eigenvalues, ev);
            }
        }
    }

    #[test]
    fn influence_vector_is_positive_and_normalised(sys in symmetric_system(12)) {
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        prop_assert!(r.right_residual <= 1e-10 && r.left_residual <= 1e-10);
        prop_assert!(r.xi.iter().all(|&x| x > 0.0));
        prop_assert!((r.xi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(r.all_positive_v1);
        prop_assert!(dot(&r.xi, &r.v1) > 0.0);
    }

    #[test]
    fn prediction_is_scale_free(sys in excitable_system(10), seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        prop_assume!(r.unstable);
        let q0 = unit_vector(&mut CounterRng::new(seed), sys.n());
        let scaled: Vec<f64> = q0.iter().map(|x| x * scale).collect();
        prop_assert_eq!(predict_coordination(&r, &q0).unwrap(), predict_coordination(&r, &scaled).unwrap());
        prop_assert_eq!(predict_coordination(&r, &r.v1).unwrap(), Prediction::D);
        prop_assert_eq!(predict_coordination(&r, &vec![0.0; sys.n()]).unwrap(), Prediction::Indeterminate);
    }

    #[test]
    fn full_reconstruction_at_zero(sys in symmetric_system(10), seed in any::<u64>()) {
        let cfg = InfluenceConfig::default();
        let r = influence_report(&sys, &cfg).unwrap();
        let spec = spectral_decomposition(&sys, &cfg);
        prop_assume!(spec.is_ok());
        let q0 = unit_vector(&mut CounterRng::new(seed), sys.n());
        let lin = linearized_solution(&r, spec.as_ref().ok(), &q0, 0.0);
        prop_assert!(sup_dist(lin.full.as_ref().unwrap(), &q0) < 1e-9);
    }

    #[test]
    fn linearisation_tracks_small_trajectories(sys in symmetric_system(8), seed in any::<u64>()) {
        let cfg = InfluenceConfig::default();
        let r = influence_report(&sys, &cfg).unwrap();
        let spec = spectral_decomposition(&sys, &cfg);
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let q0: Vec<f64> = unit_vector(&mut CounterRng::new(seed), sys.n()).iter().map(|x| x * 1e-3).collect();
        // Window: until the linear prediction has grown tenfold, capped at a
        // few relaxation times of the slowest mode.
        let end = if r.kappa1 > 0.0 { (10.0f64).ln() / r.kappa1 } else { 5.0 / (-r.kappa1).max(0.1) };
        let tr = integrate(&sys, &q0, &IntegrationConfig::adaptive(1e-11, 1e-15).with_horizon(end).with_sampling(end / 20.0)).unwrap();
        for s in &tr.samples {
            let lin = linearized_solution(&r, Some(&spec), &q0, s.t);
            let gap: Vec<f64> = lin.full.unwrap().iter().zip(&s.q).map(|(a, b)| a - b).collect();
            prop_assert!(norm(&gap) / norm(&q0) <= 0.1, "t = {}: {}", s.t, norm(&gap) / norm(&q0));
        }
    }
}

#[test]
fn claim2_signs_on_random_instances() {
    let runner_cfg = InfluenceConfig::default();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (symmetric_system(10), any::<prop::sample::Index>());
    let (mut psi_ok, mut lambda_ok, mut lambda_total) = (0, 0, 0);
    let total = 200;
    for _ in 0..total {
        let (sys, idx) = proptest::strategy::ValueTree::current(&strategy.new_tree(&mut runner).unwrap());
        let agent = idx.index(sys.n());
        let cs = comparative_statics_probe(&sys, agent, 1e-4, &runner_cfg).unwrap();
        psi_ok += cs.decreasing_in_psi() as usize;
        let h_plus_l = sys.base_payoff().z + sys.base_payoff().y;
        if h_plus_l > 0.0 || sys.params().eta[agent] == 1.0 {
            lambda_total += 1;
            lambda_ok += cs.increasing_in_lambda() as usize;
        }
    }
    assert!(psi_ok as f64 >= 0.95 * total as f64, "{psi_ok}/{total}");
    assert!(lambda_total > 50);
    assert!(lambda_ok as f64 >= 0.95 * lambda_total as f64, "{lambda_ok}/{lambda_total}");
}

#[test]
fn prediction_improves_as_start_shrinks() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = symmetric_system(10);
    let cfg = IntegrationConfig {
        sign_lock: Some(1e-6),
        ..IntegrationConfig::adaptive(1e-9, 1e-14)
    };
    let mut instances = Vec::new();
    while instances.len() < 150 {
        let sys = proptest::strategy::ValueTree::current(&strategy.new_tree(&mut runner).unwrap());
        let r = influence_report(&sys, &InfluenceConfig::default()).unwrap();
        if r.unstable {
            instances.push((sys, r));
        }
    }
    let mut rates = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3, 1e-6] {
        let mut hits = 0;
        for (k, (sys, r)) in instances.iter().enumerate() {
            let q0: Vec<f64> = unit_vector(&mut CounterRng::new(k as u64), sys.n()).iter().map(|x| x * eps).collect();
            let predicted = predict_coordination(r, &q0).unwrap();
            let tr = integrate(sys, &q0, &cfg).unwrap();
            let q = tr.final_state();
            let outcome = if q.iter().all(|&v| v > 1e-6) {
                Prediction::D
            } else if q.iter().all(|&v| v < -1e-6) {
                Prediction::C
            } else {
                Prediction::Indeterminate
            };
            assert!(tr.status != TerminalStatus::Diverged);
            hits += (outcome == predicted) as usize;
        }
        rates.push(hits as f64 / instances.len() as f64);
    }
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    // Misses shrink like ε^((κ1 − κ2)/κ1), so a small spectral gap needs a
    // much smaller start than 1e-3.
    assert!(rates[2] >= 0.95 && rates[3] > 0.99, "{rates:?}");
}
