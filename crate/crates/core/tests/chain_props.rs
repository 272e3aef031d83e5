use cyclos::chain::{Chain1, ChainComplex};
use cyclos::linalg::{q, Matrix};
use num_rational::BigRational;
use proptest::prelude::*;

/// Random multigraph on `n` vertices plus triangles over present pairs.
fn complex_strategy() -> impl Strategy<Value = ChainComplex> {
    (1u32..=12).prop_flat_map(|n| {
        let edges = prop::collection::vec((0..n, 0..n), 0..24);
        let tris = prop::collection::vec((0..n, 0..n, 0..n), 0..8);
        (Just(n), edges, tris).prop_map(|(n, edges, tris)| {
            let mut pairs = std::collections::BTreeSet::new();
            for &(a, b) in &edges {
                pairs.insert((a.min(b), a.max(b)));
            }
            let has = |x: u32, y: u32| pairs.contains(&(x.min(y), x.max(y)));
            let triangles: Vec<[u32; 3]> = tris
                .into_iter()
                .filter(|&(a, b, c)| a != b && b != c && a != c && has(a, b) && has(b, c) && has(a, c))
                .map(|(a, b, c)| [a, b, c])
                .collect();
            ChainComplex::new((0..n).collect(), edges, triangles).unwrap()
        })
    })
}

fn rational_rank(rows: usize, cols: usize, get: impl Fn(usize, usize) -> i64) -> usize {
    Matrix::<BigRational>::from_fn(rows, cols, |r, c| q(get(r, c))).rank()
}

fn chain_strategy(len: usize) -> impl Strategy<Value = Chain1> {
    prop::collection::vec(-3i64..=3, len).prop_map(|v| Chain1::from_ints(v.into_iter().enumerate()))
}

proptest! {
    #[test]
    fn boundary_squares_to_zero(x in complex_strategy()) {
        prop_assert!(x.verify_dd_zero());
        let prod = x.boundary1_matrix().mul(x.boundary2_matrix()).unwrap();
        prop_assert!(prod.is_zero());
    }

    #[test]
    fn kernel_dimension_matches_euler(x in complex_strategy()) {
        let d = x.boundary1_matrix();
        let rank = rational_rank(d.rows(), d.cols(), |r, c| d.get(r, c));
        let kernel = x.edges().len() - rank;
        prop_assert_eq!(kernel, x.edges().len() + x.betti(0).unwrap() - x.vertices().len());
        prop_assert_eq!(x.cycle_space_basis().len(), kernel);
        for z in x.cycle_space_basis() {
            prop_assert!(x.is_cycle(&z).unwrap());
        }
    }

    #[test]
    fn betti_one_matches_rank_oracle(x in complex_strategy()) {
        let d1 = x.boundary1_matrix();
        let d2 = x.boundary2_matrix();
        let r1 = rational_rank(d1.rows(), d1.cols(), |r, c| d1.get(r, c));
        let r2 = rational_rank(d2.rows(), d2.cols(), |r, c| d2.get(r, c));
        prop_assert_eq!(x.betti(1).unwrap(), x.edges().len() - r1 - r2);
        prop_assert_eq!(x.homology_basis().len(), x.betti(1).unwrap());
    }

    #[test]
    fn projection_is_idempotent_cycle(
        (x, c) in complex_strategy().prop_flat_map(|x| { let n = x.edges().len(); (Just(x), chain_strategy(n)) })
    ) {
        let z = x.project_to_cycles(&c).unwrap();
        prop_assert!(x.is_cycle(&z).unwrap());
        prop_assert_eq!(x.project_to_cycles(&z).unwrap(), z.clone());
        // residual is orthogonal to every cycle
        let r = c.sub(&z);
        for b in x.cycle_space_basis() {
            prop_assert_eq!(r.dot(&b), q(0));
        }
    }

    #[test]
    fn classes_ignore_boundaries(
        (x, coeffs, tcoeffs) in complex_strategy().prop_flat_map(|x| {
            let k = x.cycle_space_basis().len();
            let t = x.triangles().len();
            (Just(x), prop::collection::vec(-2i64..=2, k), prop::collection::vec(-2i64..=2, t))
        })
    ) {
        let basis = x.cycle_space_basis();
        let z = basis.iter().zip(&coeffs).fold(Chain1::zero(), |acc, (b, &k)| acc.add(&b.scale(&q(k))));
        let two_chain: Vec<_> = tcoeffs.iter().enumerate().map(|(i, &k)| (i, q(k))).collect();
        let shifted = z.add(&x.boundary2(&two_chain));
        prop_assert!(x.homologous(&z, &shifted).unwrap());
        prop_assert!(x.homologous(&z, &z).unwrap());
        prop_assert_eq!(x.homologous(&shifted, &z).unwrap(), true);
        let class = x.homology_class(&z).unwrap();
        prop_assert_eq!(x.homology_class(&z.neg()).unwrap(), class.neg());
    }
}
