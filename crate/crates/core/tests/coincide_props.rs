use cyclos::coincide::synth::{matched_jitter, planted_train, PlantedCycle};
use cyclos::coincide::{
    build_coincidence_graph, closed_part_with_cap, coincidence_complex, coincidence_persistence, complete_graph,
    push_to_complete, trial_invariance, CoincidenceWindow, SpikeTrain,
};
use cyclos::phasecode::Oscillator;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn osc() -> Oscillator {
    Oscillator::new(8.0, 0.0).unwrap()
}

fn random_train() -> impl Strategy<Value = SpikeTrain> {
    (2usize..7).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0.0f64..0.5), 0..14)
            .prop_map(move |spikes| SpikeTrain::new(n, spikes).unwrap())
    })
}

proptest! {
    #[test]
    fn closed_part_is_always_a_cycle(s in random_train(), delta in 0.05f64..3.0) {
        let w = CoincidenceWindow::new(delta).unwrap();
        let r = closed_part_with_cap(&s, &osc(), &w, usize::MAX).unwrap();
        prop_assert!(r.graph.boundary1(&r.closed_part).unwrap().is_zero());
        prop_assert_eq!(r.graph.project_to_cycles(&r.aggregate).unwrap(), r.closed_part.clone());
        // the removed part is orthogonal to every cycle
        for b in r.graph.cycle_space_basis() {
            prop_assert_eq!(r.removed.dot(&b), cyclos::linalg::q(0));
        }
    }

    #[test]
    fn edges_grow_with_the_window(s in random_train(), a in 0.05f64..3.0, b in 0.05f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = build_coincidence_graph(&s, &osc(), &CoincidenceWindow::new(lo).unwrap(), usize::MAX).unwrap();
        let big = build_coincidence_graph(&s, &osc(), &CoincidenceWindow::new(hi).unwrap(), usize::MAX).unwrap();
        let mut rest = big.edges().to_vec();
        for e in small.edges() {
            let k = rest.iter().position(|x| x == e);
            prop_assert!(k.is_some());
            rest.remove(k.unwrap());
        }
    }

    #[test]
    fn time_reversal_negates_the_class(s in random_train(), delta in 0.05f64..3.0) {
        let w = CoincidenceWindow::new(delta).unwrap();
        let reversed = SpikeTrain::new(s.neurons, s.spikes.iter().map(|&(i, t)| (i, -t)).collect()).unwrap();
        let ids = s.active_neurons();
        let k = complete_graph(&ids);
        let fwd = closed_part_with_cap(&s, &osc(), &w, usize::MAX).unwrap();
        let bwd = closed_part_with_cap(&reversed, &osc(), &w, usize::MAX).unwrap();
        let zf = push_to_complete(&fwd.graph, &fwd.closed_part, &ids);
        let zb = push_to_complete(&bwd.graph, &bwd.closed_part, &ids);
        prop_assert_eq!(k.homology_class(&zb).unwrap(), k.homology_class(&zf).unwrap().neg());
    }

    #[test]
    fn persistence_matches_betti_at_each_window(s in random_train()) {
        let deltas: Vec<f64> = (1..=8).map(|k| 0.2 * k as f64).collect();
        let b = coincidence_persistence(&s, &osc(), &deltas).unwrap();
        for &d in &deltas {
            let x = coincidence_complex(&s, &osc(), d, usize::MAX).unwrap();
            prop_assert_eq!(b.alive_at(0, d), x.betti(0).unwrap());
            prop_assert_eq!(b.alive_at(1, d), x.betti(1).unwrap());
        }
    }
}

/// Jittered trials that keep every coincidence give the same class.
#[test]
fn jitter_preserving_matches_keeps_the_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let delta = rng.gen_range(0.3..0.9);
        let w = CoincidenceWindow::new(delta).unwrap();
        let epsilon = rng.gen_range(0.05..0.5) * delta;
        let cycle = PlantedCycle {
            len: rng.gen_range(3..=6),
            gap: rng.gen_range(0.6..0.8) * delta,
            start_phase: rng.gen_range(0.0..1.0),
            period: rng.gen_range(0..3),
        };
        let distractors = rng.gen_range(0..4);
        let planted = planted_train(&mut rng, &cycle, distractors, &osc(), &w);
        let mut trials = vec![planted.train.clone()];
        for _ in 0..4 {
            let copy = matched_jitter(&mut rng, &planted.train, epsilon, &osc(), &w, 10_000).unwrap();
            trials.push(copy.expect("a matched jitter exists"));
        }
        assert!(trial_invariance(&trials, &osc(), &w, epsilon).unwrap().invariant);
    }
}

/// Long planted loops survive every window up to Δ.
#[test]
fn planted_loop_persists_across_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (delta, epsilon) = (0.8, 0.2);
    let w = CoincidenceWindow::new(delta).unwrap();
    let cycle = PlantedCycle { len: 20, gap: 0.18, start_phase: 0.3, period: 0 };
    let planted = planted_train(&mut rng, &cycle, 3, &osc(), &w);
    let deltas: Vec<f64> = (0..=12).map(|k| epsilon + (delta - epsilon) * k as f64 / 12.0).collect();
    let b = coincidence_persistence(&planted.train, &osc(), &deltas).unwrap();
    let cap = b.default_cap();
    let longest = b.bars_in_dim(1).iter().map(|bar| bar.length(cap)).fold(0.0, f64::max);
    assert!(longest >= delta - epsilon - 1e-12, "longest H1 bar {longest}");
}

/// Sparse noise rarely carries a cycle for more than one window step.
#[test]
fn noise_cycles_are_short_lived() {
    let deltas: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let mut quiet = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spikes: Vec<(u32, f64)> = (0..15).map(|i| (i, rng.gen_range(0.0..1.0))).collect();
        let s = SpikeTrain::new(15, spikes).unwrap();
        let b = coincidence_persistence(&s, &osc(), &deltas).unwrap();
        let cap = b.default_cap();
        if b.bars_in_dim(1).iter().all(|bar| bar.length(cap) <= 0.05 + 1e-12) {
            quiet += 1;
        }
    }
    assert!(quiet >= 19, "only {quiet}/20 noise trains were free of long H1 bars");
}
