use cyclos::pngsim::{
    find_resonant_cycles, replay_consolidate, simulate, stdp_delta, test_reentry, DelayNetwork, SimOptions,
    StdpParams, Synapse,
};
use proptest::prelude::*;

const T_THETA: f64 = 125.0;
const DELTA: f64 = 5.0;

/// Ring `0 → 1 → … → 0` whose delays sum to `n·T + err`.
fn ring(shares: &[f64], n: u32, err: f64, weights: &[f64]) -> DelayNetwork {
    let total: f64 = shares.iter().sum();
    let target = n as f64 * T_THETA + err;
    let m = shares.len();
    let syns = (0..m)
        .map(|i| Synapse::new(i as u32, ((i + 1) % m) as u32, weights[i], shares[i] / total * target))
        .collect();
    DelayNetwork::new(m, syns, DELTA, 1, 2.0).unwrap()
}

fn ring_params() -> impl Strategy<Value = (Vec<f64>, u32, f64, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|m| {
        (
            prop::collection::vec(1.0f64..4.0, m),
            1u32..=2,
            -0.9 * DELTA..0.9 * DELTA,
            prop::collection::vec(0.6f64..1.0, m),
        )
    })
}

fn stdp() -> StdpParams {
    StdpParams::new(0.05, 0.06, 20.0, 20.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resonant_rings_reenter((shares, n, err, weights) in ring_params()) {
        let net = ring(&shares, n, err, &weights);
        let found = find_resonant_cycles(&net, T_THETA, DELTA, 0.05, 8).unwrap();
        prop_assert_eq!(found.len(), 1);
        let rep = test_reentry(&net, &found[0], 10).unwrap();
        prop_assert!(rep.passed, "{:?}", rep);
        prop_assert!(rep.latency_errors.iter().all(|e| e.abs() <= DELTA));
    }

    #[test]
    fn detuned_rings_fail((shares, n, err, weights) in ring_params(), extra in 2.0f64..3.0) {
        let net = ring(&shares, n, err, &weights);
        let cycle = find_resonant_cycles(&net, T_THETA, DELTA, 0.05, 8).unwrap().remove(0);
        let detuned = ring(&shares, n, err.signum() * extra * DELTA, &weights);
        prop_assert!(find_resonant_cycles(&detuned, T_THETA, DELTA, 0.05, 8).unwrap().is_empty());
        prop_assert!(!test_reentry(&detuned, &cycle, 10).unwrap().passed);
    }

    #[test]
    fn identical_inputs_identical_logs(
        (shares, n, err, weights) in ring_params(),
        seed in any::<u64>(),
        jitter in 0.0f64..1.0,
    ) {
        let net = ring(&shares, n, err, &weights);
        let opts = SimOptions { horizon_ms: 600.0, stdp: Some(stdp()), jitter_ms: jitter, seed };
        let a = simulate(&net, &[(0, 0.0), (1, 7.5)], &opts).unwrap();
        let b = simulate(&net, &[(0, 0.0), (1, 7.5)], &opts).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn stdp_window_signs(pre in -100.0f64..100.0, post in -100.0f64..100.0) {
        let d = stdp_delta(pre, post, &stdp());
        if post > pre { prop_assert!(d > 0.0) }
        if post < pre { prop_assert!(d < 0.0) }
        if post == pre { prop_assert_eq!(d, 0.0) }
    }

    #[test]
    fn stdp_pairings_move_weights_the_right_way(
        w in 0.0f64..1.0,
        delay in 1.0f64..30.0,
        lag in 1.0f64..60.0,
    ) {
        // causal: 0 is driven, then drives 1 (forced so the pair exists for any w)
        let net = DelayNetwork::new(2, vec![Synapse::new(0, 1, w, delay)], 2.0, 1, 1.0).unwrap();
        let opts = SimOptions { stdp: Some(stdp()), ..SimOptions::new(200.0) };
        let causal = simulate(&net, &[(0, 0.0), (1, lag)], &opts).unwrap();
        prop_assert!(causal.weights[0] >= w);
        // anti-causal: 1 fires first, then 0; stop before 0's spike reaches 1
        let short = SimOptions { horizon_ms: lag + 0.5, ..opts.clone() };
        let anti = simulate(&net, &[(1, 0.0), (0, lag)], &short).unwrap();
        prop_assert!(anti.weights[0] <= w);
        for r in [&causal, &anti] {
            prop_assert!(r.weights.iter().all(|&x| (0.0..=net.w_max).contains(&x)));
        }
    }

    #[test]
    fn weights_stay_bounded(
        (shares, n, err, weights) in ring_params(),
        stims in prop::collection::vec((0u32..2, 0.0f64..300.0), 1..6),
    ) {
        let net = ring(&shares, n, err, &weights);
        let big = StdpParams::new(0.8, 0.9, 30.0, 30.0).unwrap();
        let opts = SimOptions { stdp: Some(big), ..SimOptions::new(800.0) };
        let r = simulate(&net, &stims, &opts).unwrap();
        prop_assert!(r.weights.iter().all(|&x| (0.0..=net.w_max).contains(&x)));
    }

    #[test]
    fn replay_never_weakens_cycles(
        (shares, n, err, weights) in ring_params(),
        gain in 1.01f64..1.3,
        decay in 0.5f64..0.99,
        rounds in 1usize..30,
    ) {
        let net = ring(&shares, n, err, &weights);
        let cycles = find_resonant_cycles(&net, T_THETA, DELTA, 0.05, 8).unwrap();
        let mut prev = cycles[0].weight_product;
        let mut cur = net.clone();
        for _ in 0..rounds {
            cur = replay_consolidate(&cur, &cycles, 1, gain, decay).unwrap();
            let p: f64 = cycles[0].synapses.iter().map(|&s| cur.synapses[s].weight).product();
            prop_assert!(p >= prev);
            prev = p;
        }
    }
}
