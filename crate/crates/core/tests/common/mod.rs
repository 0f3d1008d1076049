//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use snake_mppi::identifier::{RbfBasis, RbfIdentifier};
use snake_mppi::rng::{self, Stream};

/// A random N-term identifier with a well-conditioned SPD covariance.
pub fn random_identifier(n: usize, q: f64, r: f64, seed: u64) -> RbfIdentifier {
    let mut s = rng::stream(seed);
    let centers: Vec<[f64; 2]> = (0..n)
        .map(|_| [s.random_range(-15.0..15.0), s.random_range(-1.0..1.0)])
        .collect();
    let widths: Vec<f64> = (0..n).map(|_| s.random_range(2.0..8.0)).collect();
    let weights = DVector::from_fn(n, |_, _| rng::normal(&mut s));
    let a = DMatrix::from_fn(n, n, |_, _| rng::normal(&mut s));
    let p = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
    RbfIdentifier::new(
        RbfBasis::new(centers, widths).unwrap(),
        weights,
        p,
        DMatrix::identity(n, n) * q,
        r,
    )
    .unwrap()
}

/// Random point in the operating envelope.
pub fn random_xu(s: &mut Stream) -> (f64, f64) {
    (s.random_range(-15.0..15.0), s.random_range(-1.0..1.0))
}

/// Direct matrix transcription of the filter update, no shortcuts:
/// `P⁻ = P + Q′`, `K = P⁻φ (φᵀP⁻φ + R′)⁻¹`, `w⁺ = w + K(z − φᵀw)`,
/// `P⁺ = (I − Kφᵀ)P⁻`, then symmetrized.
pub fn naive_ekf(
    w: &DVector<f64>,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: f64,
    phi: &DVector<f64>,
    z: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = w.len();
    let p_pred = p + q;
    let h = DMatrix::from_column_slice(1, n, phi.as_slice());
    let s = &h * &p_pred * h.transpose() + DMatrix::from_element(1, 1, r);
    let k = &p_pred * h.transpose() * s.try_inverse().unwrap();
    let innovation = z - (&h * w)[(0, 0)];
    let w_new = w + &k * innovation;
    let p_new = (DMatrix::identity(n, n) - &k * &h) * &p_pred;
    let p_sym = (&p_new + p_new.transpose()) * 0.5;
    (w_new, p_sym)
}

/// Constant-gain model `f̂ ≡ a` everywhere (one extremely wide bump).
pub fn constant_model(a: f64) -> RbfIdentifier {
    RbfIdentifier::new(
        RbfBasis::new(vec![[0.0, 0.0]], vec![1e6]).unwrap(),
        DVector::from_element(1, a),
        DMatrix::identity(1, 1),
        DMatrix::zeros(1, 1),
        0.1,
    )
    .unwrap()
}
