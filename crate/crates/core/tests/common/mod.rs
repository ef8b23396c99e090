#![allow(dead_code)]

use ewa_core::graph::DEFAULT_MAX_REDRAWS;
use ewa_core::{BehavioralParams, EwaSystem, Graph, PayoffMatrix};
use proptest::prelude::*;

pub fn connected_graph(min_n: usize, max_n: usize) -> impl Strategy<Value = Graph> {
    (min_n..=max_n, 0.2f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| Graph::erdos_renyi(n, p, seed, true, DEFAULT_MAX_REDRAWS).unwrap())
}

/// Coordination payoffs on a half-integer grid.
pub fn coordination_payoff() -> impl Strategy<Value = PayoffMatrix> {
    (-8i32..8, -8i32..8, 1i32..10, 1i32..10).prop_map(|(x, y, dz, dw)| {
        let base = x.max(y).max(0);
        PayoffMatrix::new((base + dz) as f64 / 2.0, y as f64 / 2.0, x as f64 / 2.0, (base + dw) as f64 / 2.0)
    })
}

/// Symmetric `(h, l)` payoffs with `h > l`.
pub fn symmetric_payoff() -> impl Strategy<Value = PayoffMatrix> {
    (-4.0f64..4.0, 0.2f64..4.0).prop_map(|(l, gap)| PayoffMatrix::symmetric(l + gap, l))
}

pub fn params(n: usize) -> impl Strategy<Value = BehavioralParams> {
    (
        proptest::collection::vec(0.2f64..3.0, n),
        proptest::collection::vec(0.2f64..3.0, n),
        proptest::collection::vec(0.0f64..=1.0, n),
    )
        .prop_map(|(psi, lambda, eta)| BehavioralParams::new(psi, lambda, eta))
}

pub fn system_with(payoff: impl Strategy<Value = PayoffMatrix>, max_n: usize) -> impl Strategy<Value = EwaSystem> {
    (connected_graph(2, max_n), payoff).prop_flat_map(|(g, p)| {
        let n = g.n();
        params(n).prop_map(move |bp| EwaSystem::new(g.clone(), p, bp).unwrap())
    })
}

pub fn system(max_n: usize) -> impl Strategy<Value = EwaSystem> {
    system_with(coordination_payoff(), max_n)
}

/// A system together with a state vector in `[-r, r]^n`.
pub fn system_and_state(max_n: usize, r: f64) -> impl Strategy<Value = (EwaSystem, Vec<f64>)> {
    system(max_n).prop_flat_map(move |s| {
        let n = s.n();
        (Just(s), proptest::collection::vec(-r..r, n))
    })
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
