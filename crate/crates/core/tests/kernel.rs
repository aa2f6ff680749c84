use billmap_core::fit_kernel;
use billmap_oracles::fit_kernel_nelder_mead;

#[test]
fn default_curve_matches_reference_fit() {
    // Reference values from scipy.optimize.curve_fit on the same target.
    let k = fit_kernel(0.1, 1.0).unwrap();
    assert!((k.a - 1.5769).abs() < 2e-3, "a = {}", k.a);
    assert!((k.b - 0.8951).abs() < 2e-3, "b = {}", k.b);
}

#[test]
fn agrees_with_simplex_search() {
    for &(min_dist, spread) in &[(0.001, 1.0), (0.1, 1.0), (0.25, 1.0), (0.5, 1.0), (0.5, 2.0), (1.0, 1.0)] {
        let k = fit_kernel(min_dist, spread).unwrap();
        let (a, b) = fit_kernel_nelder_mead(min_dist, spread);
        assert!((k.a - a).abs() / a < 1e-3, "min_dist {min_dist}: a {} vs {a}", k.a);
        assert!((k.b - b).abs() / b < 1e-3, "min_dist {min_dist}: b {} vs {b}", k.b);
    }
}

#[test]
fn weight_is_monotone_and_bounded() {
    let k = fit_kernel(0.1, 1.0).unwrap();
    assert_eq!(k.weight(0.0), 1.0);
    let mut prev = 1.0;
    for i in 1..200 {
        let w = k.weight(i as f64 * 0.05);
        assert!(w > 0.0 && w < prev);
        prev = w;
    }
}

#[test]
fn touching_curve_at_unit_distance() {
    let k = fit_kernel(1.0, 1.0).unwrap();
    let w = k.weight(1.0);
    assert!((w - 0.897).abs() < 5e-3, "w(1) = {w}");
}
