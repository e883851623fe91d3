//! Property tests for the structural invariants: orderings are bijections
//! and round-trip, the filled graph contains the base edges with the exact
//! fill-in count, filled graphs are perfect-elimination, and thresholding is
//! monotone in the threshold.

use proptest::prelude::*;

use cca_core::cov::{threshold_graph, ThresholdTarget};
use cca_core::fill::filled_graph;
use cca_core::graph::Graph;
use cca_core::matrix::SymMatrix;
use cca_core::order::{apply_ordering, is_perfect_elimination, rcm_ordering, VertexOrdering};

fn arb_graph(max_p: usize) -> impl Strategy<Value = Graph> {
    (2..=max_p).prop_flat_map(|p| {
        let pairs = (0..p)
            .flat_map(|i| (0..i).map(move |j| (j, i)))
            .collect::<Vec<_>>();
        proptest::collection::vec(proptest::bool::ANY, pairs.len()).prop_map(move |mask| {
            let edges = pairs
                .iter()
                .zip(&mask)
                .filter(|(_, &keep)| keep)
                .map(|(&e, _)| e);
            Graph::from_edges(p, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rcm_is_a_bijection(g in arb_graph(24)) {
        let sigma = rcm_ordering(&g);
        let mut image: Vec<usize> = (0..g.p()).map(|v| sigma.position_of(v)).collect();
        image.sort_unstable();
        prop_assert_eq!(image, (0..g.p()).collect::<Vec<_>>());
    }

    #[test]
    fn ordering_roundtrips_under_inverse(g in arb_graph(20)) {
        let sigma = rcm_ordering(&g);
        let og = apply_ordering(&g, &sigma).unwrap();
        let relabeled = Graph::from_edges(g.p(), og.edges_sigma()).unwrap();
        let back = apply_ordering(&relabeled, &sigma.inverse()).unwrap();
        let original: Vec<(usize, usize)> = g.edges().collect();
        let round: Vec<(usize, usize)> = back.edges_sigma().collect();
        prop_assert_eq!(original, round);
    }

    #[test]
    fn filled_graph_contains_base_and_counts_add_up(g in arb_graph(20)) {
        let og = apply_ordering(&g, &rcm_ordering(&g)).unwrap();
        let fg = filled_graph(&og);
        for e in og.edges_sigma() {
            prop_assert!(fg.edges_filled().any(|f| f == e));
        }
        prop_assert_eq!(
            fg.edge_count_filled(),
            og.edge_count() + fg.fillin_count()
        );
        // fill list is row-major sorted and disjoint from the base edges
        let mut last = (0usize, 0usize);
        for &(i, j) in fg.fillins() {
            prop_assert!(i > j);
            prop_assert!((i, j) > last || fg.fillins().first() == Some(&(i, j)));
            prop_assert!(!og.has_edge_sigma(i, j));
            last = (i, j);
        }
    }

    #[test]
    fn filled_graph_is_perfect_elimination(g in arb_graph(18)) {
        let og = apply_ordering(&g, &rcm_ordering(&g)).unwrap();
        let fg = filled_graph(&og);
        prop_assert!(is_perfect_elimination(&fg.as_ordered()));
        // and so is the natural-ordered variant
        let og_nat = apply_ordering(&g, &VertexOrdering::identity(g.p())).unwrap();
        let fg_nat = filled_graph(&og_nat);
        prop_assert!(is_perfect_elimination(&fg_nat.as_ordered()));
    }

    #[test]
    fn threshold_graph_is_monotone(
        seed in 0u64..5000,
        p in 3usize..10,
        taus in proptest::collection::vec(0.0f64..2.0, 2)
    ) {
        // deterministic SPD matrix from the seed
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        let x = nalgebra::DMatrix::from_fn(3 * p, p, |_, _| next());
        let s = SymMatrix::mirror_lower(x.transpose() * &x / (3 * p) as f64);
        let (lo, hi) = if taus[0] <= taus[1] {
            (taus[0], taus[1])
        } else {
            (taus[1], taus[0])
        };
        let (g_lo, _) = threshold_graph(&s, ThresholdTarget::Absolute(lo)).unwrap();
        let (g_hi, _) = threshold_graph(&s, ThresholdTarget::Absolute(hi)).unwrap();
        // E(hi) is a subset of E(lo)
        for (u, v) in g_hi.edges() {
            prop_assert!(g_lo.has_edge(u, v));
        }
    }

    #[test]
    fn sparsity_target_is_met(
        seed in 0u64..5000,
        p in 4usize..12,
        f in 0.05f64..0.95
    ) {
        let mut state = seed.wrapping_add(17);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        let x = nalgebra::DMatrix::from_fn(3 * p, p, |_, _| next());
        let s = SymMatrix::mirror_lower(x.transpose() * &x / (3 * p) as f64);
        let (g, _) = threshold_graph(&s, ThresholdTarget::Sparsity(f)).unwrap();
        let total = (p * (p - 1) / 2) as f64;
        let sparsity = 1.0 - g.edge_count() as f64 / total;
        prop_assert!(sparsity >= f - 1e-12, "sparsity {} < target {}", sparsity, f);
    }
}
