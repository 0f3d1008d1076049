//! Gaussian mixture model over the joint (input, output) space, fitted by EM,
//! with Gaussian mixture regression as the conditional map.

mod dataset;
mod em;
mod model;
mod regression;

pub use dataset::{synthesize, Dataset, GroundTruth};
pub use em::{fit_em, regularize_covariance, responsibilities, EmFit, EmOptions, COVARIANCE_FLOOR};
pub use model::{GaussianComponent, GmmModel};
pub use regression::GmrMap;
