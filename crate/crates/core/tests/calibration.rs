use billmap_core::fuzzy_graph::{calibrate_sigma, membership_sum, SIGMA_MAX, SIGMA_MIN};
use proptest::prelude::*;

#[test]
fn closed_form_sigma() {
    let c = calibrate_sigma(&[1.0, 2.0, 2.0, 2.0], 2.0, 1e-5, 64).unwrap();
    let expected = 1.0 / 3f64.ln();
    assert!((c.sigma - expected).abs() < 1e-4, "{} vs {expected}", c.sigma);
    assert_eq!(c.rho, 1.0);
    assert!(!c.clamped);
}

#[test]
fn all_equal_distances_clamp() {
    let c = calibrate_sigma(&[2.0; 8], 3.0, 1e-5, 64).unwrap();
    assert!(c.clamped);
    assert_eq!(c.sigma, SIGMA_MIN);
}

fn sorted_dists() -> impl Strategy<Value = Vec<f64>> {
    (4usize..=64).prop_flat_map(|k| prop::collection::vec(0.0f64..50.0, k)).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn residual_small_or_clamped(dists in sorted_dists()) {
        let target = (dists.len() as f64).log2();
        let c = calibrate_sigma(&dists, target, 1e-5, 64).unwrap();
        prop_assert!(c.sigma >= SIGMA_MIN && c.sigma <= SIGMA_MAX);
        let residual = (membership_sum(&dists, c.rho, c.sigma) - target).abs();
        prop_assert!(residual <= 1e-5 || c.clamped, "residual {} sigma {}", residual, c.sigma);
    }
}
