//! Online model identification: an RBF approximation of `f(x, u)` whose
//! weight vector is the state of an extended Kalman filter with random-walk
//! dynamics and the basis vector as observation Jacobian.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::kmeans::kmeans;
use crate::plant::CONTROL_EPS;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Width used when all centers coincide.
pub const FALLBACK_WIDTH: f64 = 1.0;

/// Innovations beyond this many predicted standard deviations are gated out.
pub const OUTLIER_GATE_SIGMAS: f64 = 10.0;

/// Gaussian bumps over the `(x deg, u rad)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    centers: Vec<[f64; 2]>,
    widths: Vec<f64>,
    inv_two_var: Vec<f64>,
}

impl RbfBasis {
    pub fn new(centers: Vec<[f64; 2]>, widths: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument("basis needs at least one center".into()));
        }
        if centers.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: widths.len(),
            });
        }
        if centers.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("centers must be finite".into()));
        }
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("widths must be positive".into()));
        }
        let inv_two_var = widths.iter().map(|w| 0.5 / (w * w)).collect();
        Ok(Self {
            centers,
            widths,
            inv_two_var,
        })
    }

    /// k-means centers over `(x, u)` samples with the shared width
    /// `d_max / sqrt(2N)`, `d_max` being the largest center-to-center distance.
    pub fn from_samples(samples: &[(f64, f64)], n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if samples.len() < n {
            return Err(Error::TooFewSamples {
                needed: n,
                got: samples.len(),
            });
        }
        let points: Vec<DVector<f64>> = samples
            .iter()
            .map(|&(x, u)| DVector::from_vec(vec![x, u]))
            .collect();
        let centers: Vec<[f64; 2]> = kmeans(&points, n, seed)?
            .centers
            .iter()
            .map(|c| [c[0], c[1]])
            .collect();
        let mut d_max: f64 = 0.0;
        for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                d_max = d_max.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let width = if d_max > 0.0 {
            d_max / (2.0 * n as f64).sqrt()
        } else {
            FALLBACK_WIDTH
        };
        Self::new(centers, vec![width; n])
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn basis_vector(&self, x: f64, u: f64) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.activations(x, u))
    }

    fn activations(&self, x: f64, u: f64) -> impl Iterator<Item = f64> + '_ {
        self.centers.iter().zip(&self.inv_two_var).map(move |(c, k)| {
            let dx = x - c[0];
            let du = u - c[1];
            (-(dx * dx + du * du) * k).exp()
        })
    }
}

/// `φᵀw`.
pub fn predict_f(phi: &DVector<f64>, weights: &DVector<f64>) -> Result<f64> {
    if phi.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: phi.len(),
        });
    }
    Ok(phi.dot(weights))
}

/// Measurement for the weight filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Target(f64),
    /// `|u|` too small to divide by; no update this step.
    Skip,
}

/// `(x_next - x) / u`, or `Skip` when `|u| < CONTROL_EPS`.
pub fn innovation_target(x_next: f64, x: f64, u: f64) -> Innovation {
    if u.abs() >= CONTROL_EPS {
        Innovation::Target((x_next - x) / u)
    } else {
        Innovation::Skip
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    Applied { innovation: f64 },
    Gated { innovation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    /// `P₀ = p0_scale · I`
    pub p0_scale: f64,
    /// `Q′ = q_scale · I`
    pub q_scale: f64,
    /// `R′`
    pub r: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            p0_scale: 1.0,
            q_scale: 0.07,
            r: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfIdentifier {
    basis: RbfBasis,
    weights: DVector<f64>,
    covariance: DMatrix<f64>,
    process_noise: DMatrix<f64>,
    measurement_noise: f64,
}

impl RbfIdentifier {
    pub fn new(
        basis: RbfBasis,
        weights: DVector<f64>,
        covariance: DMatrix<f64>,
        process_noise: DMatrix<f64>,
        measurement_noise: f64,
    ) -> Result<Self> {
        let n = basis.len();
        for (got, what) in [
            (weights.len(), "weights"),
            (covariance.nrows(), "covariance rows"),
            (covariance.ncols(), "covariance cols"),
            (process_noise.nrows(), "process noise rows"),
            (process_noise.ncols(), "process noise cols"),
        ] {
            if got != n {
                return Err(Error::InvalidArgument(format!("{what}: expected {n}, got {got}")));
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        if !(measurement_noise.is_finite() && measurement_noise > 0.0) {
            return Err(Error::InvalidArgument("measurement noise must be positive".into()));
        }
        Ok(Self {
            basis,
            weights,
            covariance,
            process_noise,
            measurement_noise,
        })
    }

    /// `w₀ ~ N(0, I)` drawn from `rng`, `P₀`, `Q′`, `R′` from `settings`.
    pub fn seeded(basis: RbfBasis, settings: &FilterSettings, rng: &mut Stream) -> Result<Self> {
        let n = basis.len();
        let weights = DVector::from_fn(n, |_, _| rng::normal(rng));
        Self::new(
            basis,
            weights,
            DMatrix::identity(n, n) * settings.p0_scale,
            DMatrix::identity(n, n) * settings.q_scale,
            settings.r,
        )
    }

    pub fn basis(&self) -> &RbfBasis {
        &self.basis
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn process_noise(&self) -> &DMatrix<f64> {
        &self.process_noise
    }

    pub fn measurement_noise(&self) -> f64 {
        self.measurement_noise
    }

    /// `f̂(x, u)`; allocation-free, used inside rollouts.
    #[inline]
    pub fn predict(&self, x: f64, u: f64) -> f64 {
        self.basis
            .activations(x, u)
            .zip(self.weights.iter())
            .map(|(p, w)| p * w)
            .sum()
    }

    /// One predict/update cycle with observation Jacobian `phi`.
    pub fn ekf_update(&mut self, phi: &DVector<f64>, z: f64) -> Result<UpdateOutcome> {
        if !z.is_finite() {
            return Err(Error::NonFiniteInnovation(z));
        }
        let n = self.basis.len();
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.len(),
            });
        }
        let p_pred = &self.covariance + &self.process_noise;
        let p_phi = &p_pred * phi;
        let s = phi.dot(&p_phi) + self.measurement_noise;
        let innovation = z - phi.dot(&self.weights);
        if innovation.abs() > OUTLIER_GATE_SIGMAS * s.sqrt() {
            return Ok(UpdateOutcome::Gated { innovation });
        }
        let gain = p_phi / s;
        self.weights += &gain * innovation;
        let p_new = (DMatrix::identity(n, n) - &gain * phi.transpose()) * p_pred;
        self.covariance = (&p_new + p_new.transpose()) * 0.5;
        Ok(UpdateOutcome::Applied { innovation })
    }

    pub fn snapshot(&self) -> IdentifierSnapshot {
        let row_major = |m: &DMatrix<f64>| m.transpose().iter().copied().collect();
        IdentifierSnapshot {
            version: 1,
            centers: self.basis.centers.clone(),
            widths: self.basis.widths.clone(),
            weights: self.weights.iter().copied().collect(),
            covariance: row_major(&self.covariance),
            process_noise: row_major(&self.process_noise),
            measurement_noise: self.measurement_noise,
        }
    }

    pub fn from_snapshot(s: &IdentifierSnapshot) -> Result<Self> {
        let n = s.centers.len();
        let square = |v: &[f64], what: &str| {
            if v.len() != n * n {
                return Err(Error::InvalidArgument(format!("{what} must have {} entries", n * n)));
            }
            Ok(DMatrix::from_row_slice(n, n, v))
        };
        Self::new(
            RbfBasis::new(s.centers.clone(), s.widths.clone())?,
            DVector::from_vec(s.weights.clone()),
            square(&s.covariance, "covariance")?,
            square(&s.process_noise, "process_noise")?,
            s.measurement_noise,
        )
    }
}

/// JSON form of the identifier state; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifierSnapshot {
    pub version: u32,
    pub centers: Vec<[f64; 2]>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
    pub covariance: Vec<f64>,
    pub process_noise: Vec<f64>,
    pub measurement_noise: f64,
}

impl IdentifierSnapshot {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
