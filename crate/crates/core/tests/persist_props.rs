use cyclos::chain::ChainComplex;
use cyclos::persist::{compute_barcode, Filtration};
use proptest::prelude::*;

/// Random filtration on ≤ 8 vertices, ≤ 50 simplices total, with small
/// integer values so that ties are common.
fn filtration_strategy() -> impl Strategy<Value = Filtration> {
    (1u32..=8).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0u8..4, n as usize),
            prop::collection::vec((0..n, 0..n, 0u8..4), 0..25),
            prop::collection::vec((0..n, 0..n, 0..n, 0u8..4), 0..15),
        )
            .prop_map(|(n, vvals, edges, tris)| {
                let vertex_values: Vec<f64> = vvals.iter().map(|&v| v as f64).collect();
                let mut edge_list = Vec::new();
                let mut edge_values = Vec::new();
                let mut first: std::collections::BTreeMap<(u32, u32), f64> = Default::default();
                for (a, b, extra) in edges {
                    let val = vertex_values[a as usize].max(vertex_values[b as usize]) + extra as f64;
                    edge_list.push((a, b));
                    edge_values.push(val);
                    let key = (a.min(b), a.max(b));
                    first.entry(key).or_insert(val);
                }
                let mut tri_list = Vec::new();
                let mut tri_values = Vec::new();
                for (a, b, c, extra) in tris {
                    let key = |x: u32, y: u32| (x.min(y), x.max(y));
                    if a == b || b == c || a == c {
                        continue;
                    }
                    let (Some(x), Some(y), Some(z)) = (first.get(&key(a, b)), first.get(&key(b, c)), first.get(&key(a, c))) else {
                        continue;
                    };
                    tri_list.push([a, b, c]);
                    tri_values.push(x.max(*y).max(*z) + extra as f64);
                }
                let complex = ChainComplex::new((0..n).collect(), edge_list, tri_list).unwrap();
                Filtration::from_values(complex, vertex_values, edge_values, tri_values).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn bars_alive_match_betti(f in filtration_strategy()) {
        let b = compute_barcode(&f);
        for t in f.values() {
            let sub = f.complex_at(t);
            prop_assert_eq!(b.alive_at(0, t), sub.betti(0).unwrap(), "dim 0 at {}", t);
            prop_assert_eq!(b.alive_at(1, t), sub.betti(1).unwrap(), "dim 1 at {}", t);
        }
    }

    #[test]
    fn one_h0_bar_per_vertex(f in filtration_strategy()) {
        let b = compute_barcode(&f);
        let h0 = b.bars_in_dim(0);
        prop_assert_eq!(h0.len(), f.complex().vertices().len());
        prop_assert_eq!(h0.iter().filter(|bar| bar.death.is_none()).count(), f.complex().betti(0).unwrap());
        for bar in &b.bars {
            prop_assert!(bar.death.is_none_or(|d| bar.birth <= d));
        }
    }

    #[test]
    fn triangles_kill_at_most_one_bar(f in filtration_strategy()) {
        let b = compute_barcode(&f);
        for &tv in f.triangle_values() {
            let deaths = b.bars_in_dim(1).iter().filter(|bar| bar.death == Some(tv)).count();
            let tris_here = f.triangle_values().iter().filter(|&&v| v == tv).count();
            prop_assert!(deaths <= tris_here);
        }
        // filling every triangle never raises beta1 above the graph's
        let graph = ChainComplex::new(f.complex().vertices().to_vec(), f.complex().edges().to_vec(), vec![]).unwrap();
        prop_assert!(f.complex().betti(1).unwrap() <= graph.betti(1).unwrap());
    }
}
