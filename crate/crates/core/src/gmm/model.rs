use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

const FORMAT_VERSION: u32 = 1;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub prior: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianComponent {
    fn validate(&self, index: usize, dim: usize) -> Result<()> {
        let bad = |m: String| Error::InvalidArgument(format!("component {index}: {m}"));
        if !(self.prior > 0.0 && self.prior <= 1.0) {
            return Err(bad(format!("prior {} outside (0, 1]", self.prior)));
        }
        if self.mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.mean.len(),
            });
        }
        if self.covariance.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.covariance.nrows(),
            });
        }
        let asym = (&self.covariance - self.covariance.transpose()).amax();
        if asym >= SYMMETRY_TOL {
            return Err(bad(format!("covariance asymmetry {asym:e}")));
        }
        if self.covariance.clone().cholesky().is_none() {
            return Err(bad("covariance is not positive definite".into()));
        }
        Ok(())
    }
}

/// Cached pieces for evaluating one component's log density.
pub(crate) struct LogDensity {
    mean: DVector<f64>,
    lower: DMatrix<f64>,
    log_norm: f64,
}

impl LogDensity {
    pub(crate) fn new(c: &GaussianComponent) -> Option<Self> {
        let chol = c.covariance.clone().cholesky()?;
        let lower = chol.l();
        let log_det: f64 = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let d = c.mean.len() as f64;
        Some(Self {
            mean: c.mean.clone(),
            lower,
            log_norm: -0.5 * (d * (2.0 * PI).ln() + log_det),
        })
    }

    pub(crate) fn eval(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let y = self
            .lower
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * y.norm_squared()
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A mixture of `K` Gaussians over a joint space whose first `dim_in`
/// coordinates are the regression input and the remaining `dim_out` the output.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    components: Vec<GaussianComponent>,
    dim_in: usize,
    dim_out: usize,
}

impl GmmModel {
    pub fn new(components: Vec<GaussianComponent>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
        }
        if dim_in == 0 {
            return Err(Error::InvalidArgument("input dimension must be at least 1".into()));
        }
        let dim = dim_in + dim_out;
        for (i, c) in components.iter().enumerate() {
            c.validate(i, dim)?;
        }
        let total: f64 = components.iter().map(|c| c.prior).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("priors sum to {total}, expected 1")));
        }
        Ok(Self {
            components,
            dim_in,
            dim_out,
        })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim(&self) -> usize {
        self.dim_in + self.dim_out
    }

    pub(crate) fn log_densities(&self) -> Vec<LogDensity> {
        self.components
            .iter()
            .map(|c| LogDensity::new(c).expect("validated covariance"))
            .collect()
    }

    /// `Σ_n log Σ_k π_k N(x_n; μ_k, Σ_k)`.
    pub fn log_likelihood(&self, data: &Dataset) -> Result<f64> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        let dens = self.log_densities();
        let log_priors: Vec<f64> = self.components.iter().map(|c| c.prior.ln()).collect();
        let mut buf = vec![0.0; self.k()];
        Ok(data
            .samples()
            .iter()
            .map(|x| {
                for ((b, d), lp) in buf.iter_mut().zip(&dens).zip(&log_priors) {
                    *b = lp + d.eval(x);
                }
                log_sum_exp(&buf)
            })
            .sum())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            version: FORMAT_VERSION,
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            components: self
                .components
                .iter()
                .map(|c| ComponentDoc {
                    prior: c.prior,
                    mean: c.mean.iter().copied().collect(),
                    // row-major
                    covariance: c.covariance.transpose().iter().copied().collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model version {}",
                doc.version
            )));
        }
        let dim = doc.dim_in + doc.dim_out;
        let components = doc
            .components
            .into_iter()
            .map(|c| {
                if c.covariance.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        got: c.covariance.len(),
                    });
                }
                Ok(GaussianComponent {
                    prior: c.prior,
                    mean: DVector::from_vec(c.mean),
                    covariance: DMatrix::from_row_slice(dim, dim, &c.covariance),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components, doc.dim_in, doc.dim_out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    dim_in: usize,
    dim_out: usize,
    components: Vec<ComponentDoc>,
}

#[derive(Serialize, Deserialize)]
struct ComponentDoc {
    prior: f64,
    mean: Vec<f64>,
    covariance: Vec<f64>,
}
