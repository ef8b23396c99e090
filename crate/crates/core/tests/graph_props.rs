use ewa_core::graph::DEFAULT_MAX_REDRAWS;
use ewa_core::{Graph, Ratio};
use proptest::prelude::*;

fn connected_graph() -> impl Strategy<Value = Graph> {
    (2usize..=8, 0.3f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| Graph::erdos_renyi(n, p, seed, true, DEFAULT_MAX_REDRAWS).unwrap())
}

proptest! {
    #[test]
    fn cohesiveness_matches_float_recount(g in connected_graph()) {
        let n = g.n();
        for mask in 1u32..1 << n {
            let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let exact = g.cohesiveness(&subset).unwrap().value;
            // Recount with plain floats and compare to the reduced fraction.
            let mut best = (1usize, 1usize);
            for &i in &subset {
                let inside = g.neighbors(i).iter().filter(|&&j| mask >> j & 1 == 1).count();
                let d = g.degree(i);
                if (inside as f64) / (d as f64) < best.0 as f64 / best.1 as f64 {
                    best = (inside, d);
                }
            }
            prop_assert_eq!(exact, Ratio::new(best.0 as i128, best.1 as i128).unwrap());
            prop_assert!(exact >= Ratio::ZERO && exact <= Ratio::ONE);
        }
        let all: Vec<usize> = (0..n).collect();
        prop_assert_eq!(g.cohesiveness(&all).unwrap().value, Ratio::ONE);
    }

    #[test]
    fn centrality_is_a_positive_eigenvector(g in connected_graph()) {
        let c = g.eigenvector_centrality(1e-12, 100_000).unwrap();
        prop_assert!(c.residual <= 1e-12);
        prop_assert!(c.weights.iter().all(|&w| w > 0.0));
        let a = g.adjacency_matrix();
        let v = nalgebra::DVector::from_vec(c.weights.clone());
        prop_assert!((&a * &v - &v * c.kappa).amax() <= 1e-12);
    }

    #[test]
    fn adjacency_is_symmetric_with_degree_row_sums(g in connected_graph()) {
        let a = g.adjacency_matrix();
        prop_assert_eq!(a.transpose(), a.clone());
        for i in 0..g.n() {
            prop_assert_eq!(a.row(i).sum() as usize, g.degree(i));
            prop_assert_eq!(a[(i, i)], 0.0);
        }
    }
}

#[test]
fn er_edge_indicator_depends_only_on_seed_and_pair() {
    let a = Graph::erdos_renyi(100, 0.1, 17, false, 1).unwrap();
    let b = Graph::erdos_renyi(100, 0.1, 17, false, 1).unwrap();
    assert_eq!(a.edges(), b.edges());
    let c = Graph::erdos_renyi(100, 0.1, 18, false, 1).unwrap();
    assert_ne!(a.edges(), c.edges());
}

#[test]
fn er_mean_edge_count() {
    let counts: Vec<f64> = (0..1000u64)
        .map(|s| Graph::erdos_renyi(100, 0.1, s, false, 1).unwrap().edge_count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    // Binomial(4950, 0.1): sd ≈ 21.1, standard error over 1000 draws ≈ 0.67.
    let se = (4950.0f64 * 0.1 * 0.9).sqrt() / (1000.0f64).sqrt();
    assert!((mean - 495.0).abs() <= 3.0 * se, "mean edge count {mean}");
}

#[test]
fn connected_er_draws_are_connected() {
    for s in 0..50 {
        assert!(Graph::erdos_renyi(30, 0.1, s, true, DEFAULT_MAX_REDRAWS).unwrap().is_connected());
    }
}
