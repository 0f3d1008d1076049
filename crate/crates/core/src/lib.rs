//! Adaptive trajectory tracking for a cable-driven snake robot surrogate.
//!
//! The crate is organised bottom-up:
//!
//! * [`gmm`] fits a Gaussian mixture over (motor angle, bend angle) samples and
//!   exposes Gaussian mixture regression as the nominal position map.
//! * [`plant`] turns that map into incremental dynamics with state-dependent
//!   process noise and an environmental load.
//! * [`identifier`] approximates the unknown dynamics with a radial basis
//!   function whose weights are tracked by an extended Kalman filter.
//! * [`mppi`] and [`mpc`] are the two controllers; both roll out the identified
//!   model under the same quadratic cost ([`cost`]).
//! * [`trajectory`] builds the reference curves and [`harness`] runs the
//!   comparison protocol and persists logs, reports and plots.

pub mod cost;
pub mod error;
pub mod gmm;
pub mod harness;
pub mod identifier;
pub mod kmeans;
pub mod mpc;
pub mod mppi;
pub mod plant;
pub mod rng;
pub mod tracking;
pub mod trajectory;

pub use error::{Error, Result};
