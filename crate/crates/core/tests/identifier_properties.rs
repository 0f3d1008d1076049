mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use snake_mppi::identifier::{innovation_target, predict_f, Innovation, RbfBasis, RbfIdentifier, UpdateOutcome};
use snake_mppi::rng;

use common::{naive_ekf, random_identifier, random_xu};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_matches_per_term_loop(seed in any::<u64>(), x in -20.0f64..20.0, u in -1.5f64..1.5) {
        let id = random_identifier(10, 0.07, 0.1, seed);
        let basis = id.basis();
        let phi = basis.basis_vector(x, u);
        for i in 0..basis.len() {
            let c = basis.centers()[i];
            let s = basis.widths()[i];
            let d2 = (x - c[0]).powi(2) + (u - c[1]).powi(2);
            let expect = (-d2 / (2.0 * s * s)).exp();
            prop_assert!((phi[i] - expect).abs() < 1e-12);
            prop_assert!(phi[i] > 0.0 && phi[i] <= 1.0);
        }
        prop_assert!((id.predict(x, u) - predict_f(&phi, id.weights()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn update_matches_matrix_oracle(seed in any::<u64>(), z in -5.0f64..5.0) {
        let mut id = random_identifier(10, 0.07, 0.1, seed);
        let (x, u) = random_xu(&mut rng::stream(seed ^ 1));
        let phi = id.basis().basis_vector(x, u);
        let (w, p) = naive_ekf(id.weights(), id.covariance(), id.process_noise(), id.measurement_noise(), &phi, z);
        if let UpdateOutcome::Applied { .. } = id.ekf_update(&phi, z).unwrap() {
            prop_assert!((id.weights() - w).amax() < 1e-10);
            prop_assert!((id.covariance() - p).amax() < 1e-10);
        }
    }

    #[test]
    fn covariance_stays_symmetric_psd(seed in any::<u64>()) {
        let mut id = random_identifier(10, 0.07, 0.1, seed);
        let mut s = rng::stream(seed);
        for _ in 0..200 {
            let (x, u) = random_xu(&mut s);
            let phi = id.basis().basis_vector(x, u);
            let z = id.predict(x, u) + rng::normal(&mut s);
            id.ekf_update(&phi, z).unwrap();
        }
        let p = id.covariance();
        prop_assert!((p - p.transpose()).amax() < 1e-10);
        prop_assert!(p.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn gated_updates_leave_state_alone(seed in any::<u64>()) {
        let mut id = random_identifier(10, 0.07, 0.1, seed);
        let before = id.clone();
        let phi = id.basis().basis_vector(0.0, 0.0);
        let outcome = id.ekf_update(&phi, 1e9).unwrap();
        prop_assert!(matches!(outcome, UpdateOutcome::Gated { .. }), "{:?}", outcome);
        prop_assert_eq!(id, before);
    }

    #[test]
    fn small_controls_skip(x in -90.0f64..90.0, dx in -5.0f64..5.0, u in -9.9e-5f64..9.9e-5) {
        prop_assert_eq!(innovation_target(x + dx, x, u), Innovation::Skip);
    }
}

#[test]
fn vanishing_updates_with_no_process_noise_and_huge_r() {
    let mut id = random_identifier(10, 0.0, 1e14, 3);
    let w0 = id.weights().clone();
    let phi = id.basis().basis_vector(1.0, 0.2);
    id.ekf_update(&phi, id.predict(1.0, 0.2) + 1.0).unwrap();
    assert!((id.weights() - w0).norm() < 1e-12);
}

/// Noise-free targets from a smooth `f*` in the span of the basis, no
/// process noise: the RMS error over a probe grid must fall by at least 90%
/// in 500 updates.
#[test]
fn identifier_converges_on_smooth_target() {
    let mut s = rng::stream(42);
    let samples: Vec<(f64, f64)> = (0..400).map(|_| random_xu(&mut s)).collect();
    let basis = RbfBasis::from_samples(&samples, 10, 7).unwrap();
    let n = basis.len();
    let w_star = DVector::from_fn(n, |i, _| 2.0 * (i as f64).sin() + 1.0);
    let target = basis.clone();
    let f_star = move |x: f64, u: f64| predict_f(&target.basis_vector(x, u), &w_star).unwrap();
    let mut id = RbfIdentifier::new(basis, DVector::zeros(n), DMatrix::identity(n, n), DMatrix::zeros(n, n), 0.1).unwrap();

    let grid: Vec<(f64, f64)> = (0..15)
        .flat_map(|i| (0..11).map(move |j| (-14.0 + 2.0 * i as f64, -1.0 + 0.2 * j as f64)))
        .collect();
    let rms = |id: &RbfIdentifier| {
        (grid.iter().map(|&(x, u)| (id.predict(x, u) - f_star(x, u)).powi(2)).sum::<f64>() / grid.len() as f64).sqrt()
    };
    let before = rms(&id);
    for _ in 0..500 {
        let (x, u) = random_xu(&mut s);
        let phi = id.basis().basis_vector(x, u);
        id.ekf_update(&phi, f_star(x, u)).unwrap();
    }
    let after = rms(&id);
    assert!(after <= 0.1 * before, "RMS {before} -> {after}");
}
