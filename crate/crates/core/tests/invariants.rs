use billmap_core::evaluate::{neighborhood_purity, trustworthiness};
use billmap_core::fuzzy_graph::{build_fuzzy_graph, CalibrationOptions};
use billmap_core::{knn_exact, DenseMatrix, Metric};
use proptest::prelude::*;

fn matrix(max_n: usize, d: usize) -> impl Strategy<Value = DenseMatrix> {
    (6..max_n).prop_flat_map(move |n| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| DenseMatrix::new(n, d, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbor_rows_are_sorted_and_distinct(x in matrix(60, 3), k in 1usize..5) {
        let g = knn_exact(&x, k, Metric::Euclidean).unwrap();
        for i in 0..x.rows() {
            prop_assert!(g.dists(i).windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(!g.ids(i).contains(&i));
        }
    }

    #[test]
    fn fuzzy_graph_is_symmetric_with_unit_weights(x in matrix(60, 3), k in 2usize..6) {
        let g = knn_exact(&x, k, Metric::Euclidean).unwrap();
        let f = build_fuzzy_graph(&g, &CalibrationOptions::default()).unwrap();
        for e in f.edges() {
            prop_assert!(e.i < e.j);
            prop_assert!(e.weight > 0.0 && e.weight <= 1.0);
            prop_assert_eq!(f.weight(e.i, e.j), f.weight(e.j, e.i));
        }
        // Every point's nearest neighbor edge carries full membership.
        for i in 0..x.rows() {
            let j = g.ids(i)[0];
            if g.dists(i)[0] < g.dists(i).get(1).copied().unwrap_or(f64::INFINITY) {
                prop_assert!((f.weight(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scores_stay_in_unit_interval(x in matrix(40, 4), y in matrix(40, 2), k in 1usize..5) {
        let n = x.rows().min(y.rows());
        let x = DenseMatrix::from_rows(&x.iter_rows().take(n).collect::<Vec<_>>()).unwrap();
        let y = DenseMatrix::from_rows(&y.iter_rows().take(n).collect::<Vec<_>>()).unwrap();
        let t = trustworthiness(&x, &y, k, Metric::Euclidean).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let p = neighborhood_purity(&y, &labels, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(trustworthiness(&x, &x, k, Metric::Euclidean).unwrap(), 1.0);
    }
}
