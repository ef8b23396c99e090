use ewa_core::game::{
    enumerate_limiting_be, enumerate_pure_ne, is_limiting_be, nash_by_cohesion, nash_check,
    MiscoordinationRegime, PureProfile,
};
use ewa_core::graph::DEFAULT_MAX_REDRAWS;
use ewa_core::{Graph, PayoffMatrix, Ratio, Threshold};
use proptest::prelude::*;

fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2usize..=max_n, 0.2f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| Graph::erdos_renyi(n, p, seed, true, DEFAULT_MAX_REDRAWS).unwrap())
}

/// Integer-valued coordination payoffs in half steps.
fn coordination_payoff() -> impl Strategy<Value = PayoffMatrix> {
    (-10i32..10, -10i32..10, 1i32..12, 1i32..12)
        .prop_map(|(x, y, dz, dw)| {
            // z and w both exceed max(x, y, 0).
            let base = x.max(y).max(0);
            let z = base + dz;
            let w = base + dw;
            PayoffMatrix::new(z as f64 / 2.0, y as f64 / 2.0, x as f64 / 2.0, w as f64 / 2.0)
        })
}

fn exact(t: Threshold) -> Ratio {
    match t {
        Threshold::Exact(r) => r,
        Threshold::Approx(v) => panic!("inexact threshold {v}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn best_response_and_cohesion_agree(g in connected_graph(8), payoff in coordination_payoff()) {
        prop_assert!(payoff.is_coordination());
        // enumerate_pure_ne fails loudly if the two characterisations differ.
        let ne = enumerate_pure_ne(&g, &payoff, 20).unwrap();
        let n = g.n();
        let listed: Vec<_> = ne.iter().map(|p| p.profile.clone()).collect();
        for index in 0..1u64 << n {
            let p = PureProfile::from_index(n, index);
            let direct = nash_check(&g, &payoff, &p).unwrap().is_some();
            prop_assert_eq!(direct, nash_by_cohesion(&g, &payoff, &p).unwrap());
            prop_assert_eq!(direct, listed.contains(&p));
        }
        prop_assert!(listed.contains(&PureProfile::all(n, false)));
        prop_assert!(listed.contains(&PureProfile::all(n, true)));
    }

    #[test]
    fn thresholds_move_with_the_regime(payoff in coordination_payoff()) {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let pairs: Vec<(Ratio, Ratio)> = grid
            .iter()
            .map(|&e| {
                let (a, b) = payoff.limiting_thresholds(e).unwrap();
                (exact(a), exact(b))
            })
            .collect();
        for (r1, r2) in &pairs {
            prop_assert!(*r1 < Ratio::ONE && *r2 < Ratio::ONE);
        }
        match payoff.classify().regime {
            MiscoordinationRegime::Mild => {
                prop_assert!(pairs.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
            }
            MiscoordinationRegime::Severe => {
                prop_assert!(pairs.windows(2).all(|w| w[1].0 <= w[0].0 && w[1].1 <= w[0].1));
            }
            MiscoordinationRegime::Indeterminate => {
                prop_assert!(pairs.windows(2).all(|w| w[1] == w[0]));
            }
        }
        let r = exact(payoff.ne_threshold().unwrap());
        prop_assert_eq!(pairs[10].0, r);
        prop_assert_eq!(pairs[10].1, Ratio::ONE.checked_sub(r).unwrap());
        // At η = 0 the thresholds reduce to −x/(w − x) and −y/(z − y).
        let q = |a: f64| Ratio::from_decimal(a).unwrap();
        let r1_0 = q(-payoff.x).checked_div(q(payoff.w - payoff.x)).unwrap();
        let r2_0 = q(-payoff.y).checked_div(q(payoff.z - payoff.y)).unwrap();
        prop_assert_eq!(pairs[0], (r1_0, r2_0));
    }

    #[test]
    fn nonnegative_d_share_threshold_when_x_is_nonpositive(payoff in coordination_payoff()) {
        prop_assume!(payoff.x <= 0.0);
        for k in 0..=10 {
            let (r1, _) = payoff.limiting_thresholds(k as f64 / 10.0).unwrap();
            prop_assert!(exact(r1) >= Ratio::ZERO);
        }
    }

    #[test]
    fn limiting_equilibria_nest_in_eta(
        g in connected_graph(6),
        payoff in coordination_payoff(),
        lo in proptest::collection::vec(0u8..=10, 6),
        bump in proptest::collection::vec(0u8..=10, 6),
    ) {
        let n = g.n();
        let eta_lo: Vec<f64> = lo[..n].iter().map(|&k| k as f64 / 10.0).collect();
        let eta_hi: Vec<f64> = lo[..n]
            .iter()
            .zip(&bump[..n])
            .map(|(&a, &b)| (a + b).min(10) as f64 / 10.0)
            .collect();
        let be_lo = enumerate_limiting_be(&g, &payoff, &eta_lo, 20).unwrap();
        let be_hi = enumerate_limiting_be(&g, &payoff, &eta_hi, 20).unwrap();
        prop_assert!(be_lo.len() >= 2 && be_hi.len() >= 2);
        prop_assert!(be_lo.contains(&PureProfile::all(n, true)));
        prop_assert!(be_lo.contains(&PureProfile::all(n, false)));
        match payoff.classify().regime {
            MiscoordinationRegime::Mild => prop_assert!(be_hi.iter().all(|p| be_lo.contains(p))),
            MiscoordinationRegime::Severe => prop_assert!(be_lo.iter().all(|p| be_hi.contains(p))),
            MiscoordinationRegime::Indeterminate => prop_assert_eq!(&be_lo, &be_hi),
        }
        for p in &be_hi {
            prop_assert!(is_limiting_be(&g, &payoff, &eta_hi, p).unwrap());
        }
    }

    #[test]
    fn full_weight_limiting_equilibria_are_strict_nash(g in connected_graph(7), payoff in coordination_payoff()) {
        let n = g.n();
        let be = enumerate_limiting_be(&g, &payoff, &vec![1.0; n], 20).unwrap();
        let strict: Vec<_> = enumerate_pure_ne(&g, &payoff, 20)
            .unwrap()
            .into_iter()
            .filter(|p| p.strict)
            .map(|p| p.profile)
            .collect();
        prop_assert_eq!(be, strict);
    }
}

#[test]
fn float_payoffs_use_margin() {
    let p = PayoffMatrix::new(std::f64::consts::PI, -1.0, 0.0, 2.0);
    assert!(matches!(p.ne_threshold().unwrap(), Threshold::Approx(_)));
    let ne = enumerate_pure_ne(&Graph::cycle(5), &p, 20).unwrap();
    assert!(ne.len() >= 2);
}
