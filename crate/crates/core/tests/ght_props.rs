use std::collections::VecDeque;

use cyclos::ght::{
    accumulate, argmax_peak, peak_persistence, random_closed_path, saccade_invariance_audit, synthetic_scene,
    AccConfig, Accumulator, Feature, GazeTransform, GhtKernel, Glimpse, ModelTable,
};
use cyclos::raster::Raster;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn table() -> ModelTable {
    ModelTable::from_pairs([(0, [3.0, 0.0]), (1, [0.0, 2.5]), (2, [-2.0, -1.0]), (3, [1.0, -3.5])])
}

fn random_glimpses(rng: &mut ChaCha8Rng, n: usize) -> Vec<Glimpse> {
    (0..n)
        .map(|_| {
            let gaze = GazeTransform {
                rotation: rng.gen_range(-0.5..0.5),
                translation: [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
            };
            let features = (0..rng.gen_range(1..12))
                .map(|_| Feature {
                    position: [rng.gen_range(0.0..24.0), rng.gen_range(0.0..24.0)],
                    orientation: rng.gen_range(0.0..6.28),
                    descriptor: rng.gen_range(0..4),
                })
                .collect();
            Glimpse::new(gaze, features)
        })
        .collect()
}

/// Number of 4-connected components of `{v ≥ t, v > 0}`.
fn components(g: &Raster, t: f64) -> usize {
    let inside = |i: usize| g.values[i] > 0.0 && g.values[i] >= t;
    let mut seen = vec![false; g.values.len()];
    let mut count = 0;
    for s in 0..g.values.len() {
        if seen[s] || !inside(s) {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / g.width, i % g.width);
            let mut next = Vec::new();
            if r > 0 {
                next.push(i - g.width);
            }
            if r + 1 < g.height {
                next.push(i + g.width);
            }
            if c > 0 {
                next.push(i - 1);
            }
            if c + 1 < g.width {
                next.push(i + 1);
            }
            for n in next {
                if !seen[n] && inside(n) {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accumulator_ignores_order(seed in any::<u64>(), gaussian in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..6);
        let glimpses = random_glimpses(&mut rng, n);
        let kernel = if gaussian { GhtKernel::Gaussian { sigma: 0.8 } } else { GhtKernel::Delta };
        let cfg = AccConfig { origin: [-2.0, -2.0], cell: 1.0, width: 28, height: 28, kernel };
        let base = serde_json::to_string(&accumulate(&glimpses, &table(), &cfg).unwrap()).unwrap();
        for _ in 0..5 {
            let mut shuffled = glimpses.clone();
            shuffled.shuffle(&mut rng);
            for g in &mut shuffled {
                g.features.shuffle(&mut rng);
            }
            let other = serde_json::to_string(&accumulate(&shuffled, &table(), &cfg).unwrap()).unwrap();
            prop_assert_eq!(&base, &other);
        }
    }

    #[test]
    fn grid_aligned_reregistration_is_exact(seed in any::<u64>(), gaussian in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world: Vec<Feature> = (0..rng.gen_range(1..15))
            .map(|_| Feature {
                position: [rng.gen_range(0..1536) as f64 / 64.0, rng.gen_range(0..1536) as f64 / 64.0],
                orientation: 0.0,
                descriptor: rng.gen_range(0..4),
            })
            .collect();
        let kernel = if gaussian { GhtKernel::Gaussian { sigma: 0.6 } } else { GhtKernel::Delta };
        let cfg = AccConfig { origin: [-4.0, -4.0], cell: 1.0, width: 32, height: 32, kernel };
        let plain = accumulate(&[Glimpse::new(GazeTransform::identity(), world.clone())], &table(), &cfg).unwrap();
        let g = GazeTransform::translation(rng.gen_range(-8..8) as f64, rng.gen_range(-8..8) as f64);
        let seen: Vec<Feature> = world.iter().map(|f| g.apply_feature(f)).collect();
        let moved = accumulate(&[Glimpse::new(g, seen)], &table(), &cfg).unwrap();
        prop_assert_eq!(plain, moved);
    }

    #[test]
    fn general_reregistration_keeps_peak(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centre = [rng.gen_range(8.0..16.0), rng.gen_range(8.0..16.0)];
        let scene = synthetic_scene(&mut rng, &table(), centre, 6, 24.0);
        let cfg = AccConfig::delta([0.0, 0.0], 1.0, 24, 24);
        let plain = argmax_peak(&accumulate(&[Glimpse::new(GazeTransform::identity(), scene.features.clone())], &table(), &cfg).unwrap()).unwrap();
        let g = GazeTransform { rotation: rng.gen_range(-1.0..1.0), translation: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)] };
        let seen: Vec<Feature> = scene.features.iter().map(|f| g.apply_feature(f)).collect();
        let moved = argmax_peak(&accumulate(&[Glimpse::new(g, seen)], &table(), &cfg).unwrap()).unwrap();
        prop_assert!(plain.cell.0.abs_diff(moved.cell.0) <= 1 && plain.cell.1.abs_diff(moved.cell.1) <= 1);
    }

    #[test]
    fn bars_count_components(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let values: Vec<f64> = (0..w * h).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0..8) as f64 }).collect();
        let acc = Accumulator { config: AccConfig::delta([0.0, 0.0], 1.0, w, h), grid: Raster::new(w, h, values), overflow: 0.0, overflow_votes: 0 };
        let thresholds: Vec<f64> = (0..=8).rev().map(|t| t as f64 - 0.5).collect();
        let code = peak_persistence(&acc, &thresholds).unwrap();
        for &t in &thresholds {
            prop_assert_eq!(code.alive_at(0, t), components(&acc.grid, t), "t = {}", t);
        }
    }

    #[test]
    fn closed_scanpaths_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene = synthetic_scene(&mut rng, &table(), [12.3, 11.7], 10, 24.0);
        let paths: Vec<_> = (0..5)
            .map(|_| {
                let len = rng.gen_range(2..7);
                random_closed_path(&mut rng, len, 4.0, 0.6)
            })
            .collect();
        let cfg = AccConfig::delta([0.0, 0.0], 1.0, 24, 24);
        let report = saccade_invariance_audit(&scene, &paths, &table(), &cfg, true).unwrap();
        prop_assert!(report.passed, "{:?}", report.paths.iter().map(|p| p.peak).collect::<Vec<_>>());
        prop_assert!(report.paths.iter().all(|p| p.closed));
    }
}

#[test]
fn noisy_gaussian_votes_find_the_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = [14.3, 9.6];
    let table = ModelTable::from_pairs([(0, [0.0, 0.0])]);
    let noise = Normal::new(0.0, 0.7).unwrap();
    let features: Vec<Feature> = (0..100)
        .map(|_| Feature {
            position: [truth[0] + noise.sample(&mut rng), truth[1] + noise.sample(&mut rng)],
            orientation: 0.0,
            descriptor: 0,
        })
        .collect();
    let cfg = AccConfig { origin: [0.0, 0.0], cell: 1.0, width: 24, height: 20, kernel: GhtKernel::Gaussian { sigma: 1.0 } };
    let peak = argmax_peak(&accumulate(&[Glimpse::new(GazeTransform::identity(), features)], &table, &cfg).unwrap()).unwrap();
    assert!((peak.centre[0] - truth[0]).abs() <= 1.0 && (peak.centre[1] - truth[1]).abs() <= 1.0, "{peak:?}");
}

#[test]
fn single_bump_spans_all_thresholds() {
    let cfg = AccConfig { origin: [0.0, 0.0], cell: 1.0, width: 15, height: 15, kernel: GhtKernel::Gaussian { sigma: 2.0 } };
    let f = Feature { position: [7.5, 7.5], orientation: 0.0, descriptor: 0 };
    let acc = accumulate(&[Glimpse::new(GazeTransform::identity(), vec![f])], &ModelTable::from_pairs([(0, [0.0, 0.0])]), &cfg).unwrap();
    let top = acc.grid.max();
    let thresholds: Vec<f64> = (1..=10).rev().map(|k| top * k as f64 / 10.0).collect();
    let code = peak_persistence(&acc, &thresholds).unwrap();
    assert_eq!(code.bars.len(), 1);
    assert_eq!(code.bars[0].birth, top);
    assert!(code.bars[0].death.is_none());
}
