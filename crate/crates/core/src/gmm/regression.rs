use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::log_sum_exp;
use super::{GmmModel, COVARIANCE_FLOOR};
use crate::{Error, Result};

impl GmmModel {
    /// Gaussian mixture regression: mean and covariance of the output block
    /// conditioned on the input block.
    pub fn condition(&self, input: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (di, dout) = (self.dim_in(), self.dim_out());
        if input.len() != di {
            return Err(Error::DimensionMismatch {
                expected: di,
                got: input.len(),
            });
        }
        if dout == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let u = DVector::from_column_slice(input);
        let mut log_h = Vec::with_capacity(self.k());
        let mut means = Vec::with_capacity(self.k());
        let mut covs = Vec::with_capacity(self.k());
        for (idx, c) in self.components().iter().enumerate() {
            let s_uu = c.covariance.view((0, 0), (di, di)).into_owned();
            let s_xu = c.covariance.view((di, 0), (dout, di)).into_owned();
            let s_xx = c.covariance.view((di, di), (dout, dout)).into_owned();
            if SymmetricEigen::new(s_uu.clone()).eigenvalues.min() < 0.5 * COVARIANCE_FLOOR {
                return Err(Error::SingularInputBlock(idx));
            }
            let chol = s_uu.cholesky().ok_or(Error::SingularInputBlock(idx))?;
            let mu_u = c.mean.rows(0, di);
            let mu_x = c.mean.rows(di, dout);
            let diff = &u - mu_u;
            let solved = chol.solve(&diff);
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            log_h.push(
                c.prior.ln() - 0.5 * (di as f64 * (2.0 * PI).ln() + log_det) - 0.5 * diff.dot(&solved),
            );
            means.push(mu_x + &s_xu * solved);
            covs.push(&s_xx - &s_xu * chol.solve(&s_xu.transpose()));
        }
        let lse = log_sum_exp(&log_h);
        let mut mean = DVector::zeros(dout);
        let mut second = DMatrix::zeros(dout, dout);
        for ((lh, m), cv) in log_h.iter().zip(&means).zip(&covs) {
            let h = (lh - lse).exp();
            mean.axpy(h, m, 1.0);
            second += (cv + m * m.transpose()) * h;
        }
        let cov = second - &mean * mean.transpose();
        Ok((mean, cov))
    }

    /// Scalar GMR: bend angle mean (deg) and variance (deg²) at motor angle `u`.
    pub fn gmr_condition(&self, u: f64) -> Result<(f64, f64)> {
        let (m, c) = self.condition(&[u])?;
        if m.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: m.len(),
            });
        }
        Ok((m[0], c[(0, 0)]))
    }
}

#[derive(Debug, Clone, Copy)]
struct ScalarComponent {
    log_weight: f64,
    mu_u: f64,
    mu_x: f64,
    var_u: f64,
    gain: f64,
    var_x_given_u: f64,
}

/// Precomputed scalar GMR for one-input one-output mixtures, with the
/// analytic derivative of the conditional mean.
#[derive(Debug, Clone)]
pub struct GmrMap {
    components: Vec<ScalarComponent>,
}

impl GmrMap {
    pub fn new(model: &GmmModel) -> Result<Self> {
        if model.dim_in() != 1 || model.dim_out() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: model.dim(),
            });
        }
        let components = model
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let var_u = c.covariance[(0, 0)];
                if !(var_u >= 0.5 * COVARIANCE_FLOOR) {
                    return Err(Error::SingularInputBlock(i));
                }
                let s_xu = c.covariance[(1, 0)];
                Ok(ScalarComponent {
                    log_weight: c.prior.ln() - 0.5 * (2.0 * PI * var_u).ln(),
                    mu_u: c.mean[0],
                    mu_x: c.mean[1],
                    var_u,
                    gain: s_xu / var_u,
                    var_x_given_u: c.covariance[(1, 1)] - s_xu * s_xu / var_u,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    fn weights(&self, u: f64) -> Vec<f64> {
        let mut w: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let d = u - c.mu_u;
                c.log_weight - 0.5 * d * d / c.var_u
            })
            .collect();
        let lse = log_sum_exp(&w);
        for v in &mut w {
            *v = (*v - lse).exp();
        }
        w
    }

    pub fn mean(&self, u: f64) -> f64 {
        self.weights(u)
            .iter()
            .zip(&self.components)
            .map(|(h, c)| h * (c.mu_x + c.gain * (u - c.mu_u)))
            .sum()
    }

    pub fn variance(&self, u: f64) -> f64 {
        let h = self.weights(u);
        let mut mean = 0.0;
        let mut second = 0.0;
        for (h, c) in h.iter().zip(&self.components) {
            let m = c.mu_x + c.gain * (u - c.mu_u);
            mean += h * m;
            second += h * (c.var_x_given_u + m * m);
        }
        second - mean * mean
    }

    /// d mean / du.
    pub fn slope(&self, u: f64) -> f64 {
        let h = self.weights(u);
        // d log N(u; μ, s) / du for each component
        let score: Vec<f64> = self.components.iter().map(|c| -(u - c.mu_u) / c.var_u).collect();
        let avg_score: f64 = h.iter().zip(&score).map(|(h, a)| h * a).sum();
        h.iter()
            .zip(&score)
            .zip(&self.components)
            .map(|((h, a), c)| {
                let m = c.mu_x + c.gain * (u - c.mu_u);
                h * (a - avg_score) * m + h * c.gain
            })
            .sum()
    }
}
