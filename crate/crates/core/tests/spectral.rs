use billmap_core::fuzzy_graph::{build_fuzzy_graph, CalibrationOptions};
use billmap_core::init::{component_eigenvectors, connected_components};
use billmap_core::{knn_exact, Metric};
use billmap_oracles::gaussian_blobs;
use nalgebra::{DMatrix, SymmetricEigen};

#[test]
fn eigenpairs_match_dense_solver() {
    let blobs = gaussian_blobs(90, 2, 4, 2.0, 6);
    let g = knn_exact(&blobs.x, 12, Metric::Euclidean).unwrap();
    let fuzzy = build_fuzzy_graph(&g, &CalibrationOptions::default()).unwrap();
    let comps = connected_components(&fuzzy);
    assert_eq!(comps.len(), 1, "test graph should be connected");
    let n = fuzzy.n;
    let comp: Vec<usize> = (0..n).collect();
    let local: Vec<usize> = (0..n).collect();
    let (vals, vecs) = component_eigenvectors(&comp, &local, &fuzzy.adjacency(), 2, 1).unwrap();

    let mut w = DMatrix::<f64>::zeros(n, n);
    for e in fuzzy.edges() {
        w[(e.i, e.j)] = e.weight;
        w[(e.j, e.i)] = e.weight;
    }
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - w[(i, j)] / (deg[i] * deg[j]).sqrt()
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    for c in 0..2 {
        let idx = order[c + 1];
        let expected = eig.eigenvalues[idx];
        assert!((vals[c] - expected).abs() < 1e-6, "eigenvalue {c}: {} vs {expected}", vals[c]);
        let reference = eig.eigenvectors.column(idx);
        let ours: Vec<f64> = (0..n).map(|i| vecs.get(i, c)).collect();
        let dot: f64 = ours.iter().zip(reference.iter()).map(|(a, b)| a * b).sum();
        assert!(dot.abs() > 1.0 - 1e-5, "eigenvector {c} alignment {dot}");
    }
}
