use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::log_sum_exp;
use super::{Dataset, GaussianComponent, GmmModel};
use crate::kmeans::kmeans;
use crate::{Error, Result};

/// Added to every covariance diagonal; also the eigenvalue floor.
pub const COVARIANCE_FLOOR: f64 = 1e-6;

/// Components whose responsibility mass falls below this (in samples) are
/// reported as degenerate rather than regularised.
const MIN_COMPONENT_MASS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Absolute tolerance on the change of the total log-likelihood.
    pub tol: f64,
    /// Input dimension of the joint space; the rest is output.
    pub dim_in: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            k: 15,
            seed: 0,
            max_iter: 200,
            tol: 0.05,
            dim_in: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: GmmModel,
    /// Log-likelihood of the parameters at each iteration, starting with the
    /// k-means initialisation.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Symmetrises `cov` and clips its eigenvalues at `floor`. A covariance
/// already above the floor comes back unchanged, so the M-step stays the
/// exact maximiser over `{Σ : λ_min(Σ) ≥ floor}` and EM stays monotone.
pub fn regularize_covariance(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.min() >= floor {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Posterior component probabilities, one row per sample.
pub fn responsibilities(model: &GmmModel, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let mut resp = vec![vec![0.0; model.k()]; data.len()];
    e_step(model, data, &mut resp);
    Ok(resp)
}

/// Fills `resp` and returns the total log-likelihood.
fn e_step(model: &GmmModel, data: &Dataset, resp: &mut [Vec<f64>]) -> f64 {
    let dens = model.log_densities();
    let log_priors: Vec<f64> = model.components().iter().map(|c| c.prior.ln()).collect();
    let mut total = 0.0;
    for (x, row) in data.samples().iter().zip(resp.iter_mut()) {
        for ((r, d), lp) in row.iter_mut().zip(&dens).zip(&log_priors) {
            *r = lp + d.eval(x);
        }
        let lse = log_sum_exp(row);
        for r in row.iter_mut() {
            *r = (*r - lse).exp();
        }
        total += lse;
    }
    total
}

fn m_step(data: &Dataset, resp: &[Vec<f64>], k: usize, dim_in: usize) -> Result<GmmModel> {
    let n = data.len() as f64;
    let dim = data.dim();
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let mass: f64 = resp.iter().map(|r| r[j]).sum();
        if !(mass >= MIN_COMPONENT_MASS) {
            return Err(Error::DegenerateComponent { component: j, mass });
        }
        let mut mean = DVector::zeros(dim);
        for (x, r) in data.samples().iter().zip(resp) {
            mean.axpy(r[j], x, 1.0);
        }
        mean /= mass;
        let mut cov = DMatrix::zeros(dim, dim);
        for (x, r) in data.samples().iter().zip(resp) {
            let d = x - &mean;
            cov.ger(r[j], &d, &d, 1.0);
        }
        cov /= mass;
        components.push(GaussianComponent {
            prior: mass / n,
            mean,
            covariance: regularize_covariance(&cov, COVARIANCE_FLOOR),
        });
    }
    // renormalise so the priors sum to one exactly up to rounding
    let total: f64 = components.iter().map(|c| c.prior).sum();
    for c in &mut components {
        c.prior /= total;
    }
    GmmModel::new(components, dim_in, dim - dim_in)
}

/// Expectation-maximisation for a full-covariance mixture, initialised from
/// seeded k-means++ hard assignments.
pub fn fit_em(data: &Dataset, opts: &EmOptions) -> Result<EmFit> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if opts.k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if opts.dim_in == 0 || opts.dim_in > data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: opts.dim_in,
        });
    }
    if data.len() < opts.k {
        return Err(Error::TooFewSamples {
            needed: opts.k,
            got: data.len(),
        });
    }

    let clusters = kmeans(data.samples(), opts.k, opts.seed)?;
    let mut resp: Vec<Vec<f64>> = clusters
        .labels
        .iter()
        .map(|&l| {
            let mut row = vec![0.0; opts.k];
            row[l] = 1.0;
            row
        })
        .collect();
    let mut model = m_step(data, &resp, opts.k, opts.dim_in)?;

    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iter + 1);
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let ll = e_step(&model, data, &mut resp);
        if let Some(&prev) = history.last() {
            if (ll - prev).abs() < opts.tol {
                converged = true;
            }
        }
        history.push(ll);
        if converged || iterations == opts.max_iter {
            break;
        }
        model = m_step(data, &resp, opts.k, opts.dim_in)?;
        iterations += 1;
    }

    Ok(EmFit {
        model,
        log_likelihood: history,
        iterations,
        converged,
    })
}
