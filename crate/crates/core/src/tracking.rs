//! The closed tracking loop shared by both controllers.

use std::time::Instant;

use crate::identifier::{innovation_target, IdentifierSnapshot, Innovation, RbfIdentifier, UpdateOutcome};
use crate::plant::{DofPlant, PositionMap};
use crate::{Error, Result};

/// A per-degree-of-freedom feedback law on the identified model.
pub trait Controller {
    fn tag(&self) -> &'static str;

    /// Motor angle to apply now, given the measured bend angle and the next
    /// reference point. `model` is frozen for the duration of the call.
    fn plan(&mut self, x: f64, x_desired: f64, model: &RbfIdentifier) -> Result<f64>;
}

/// One tracked reference point. Arrays are `[pitch, yaw]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub reference: [f64; 2],
    /// Sensor reading after the control was applied.
    pub measured: [f64; 2],
    pub true_state: [f64; 2],
    pub control: [f64; 2],
    /// Prediction error `z - φᵀw` of the filter update, `None` when the
    /// update was skipped or gated.
    pub innovation: [Option<f64>; 2],
    /// Controller time for both degrees of freedom, ns.
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingLog {
    pub controller: String,
    pub trajectory: String,
    pub repeat: usize,
    pub seed: u64,
    pub records: Vec<StepRecord>,
}

impl TrackingLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn mean_step_ns(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.wall_ns as f64).sum::<f64>() / self.records.len() as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackOptions {
    /// Capture identifier state after every this many steps.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrackingOutput {
    pub log: TrackingLog,
    /// `(steps completed, [pitch, yaw])`
    pub snapshots: Vec<(usize, [IdentifierSnapshot; 2])>,
}

/// Visits every reference point once: plan on the frozen identifiers, apply
/// the control, read the sensors, then update each identifier.
pub fn run<M: PositionMap, C: Controller>(
    plants: &mut [DofPlant<M>; 2],
    identifiers: &mut [RbfIdentifier; 2],
    controllers: &mut [C; 2],
    reference: &[[f64; 2]],
    opts: &TrackOptions,
) -> Result<TrackingOutput> {
    if reference.is_empty() {
        return Err(Error::InvalidArgument("reference needs at least one point".into()));
    }
    let mut measured = [plants[0].observe(), plants[1].observe()];
    let mut records = Vec::with_capacity(reference.len());
    let mut snapshots = Vec::new();

    for (j, target) in reference.iter().enumerate() {
        let mut control = [0.0; 2];
        let start = Instant::now();
        for d in 0..2 {
            control[d] = controllers[d].plan(measured[d], target[d], &identifiers[d])?;
        }
        let wall_ns = (start.elapsed().as_nanos() as u64).max(1);

        let mut true_state = [0.0; 2];
        let mut innovation = [None; 2];
        for d in 0..2 {
            true_state[d] = plants[d].step(control[d])?.x;
            let z = plants[d].observe();
            if let Innovation::Target(t) = innovation_target(z, measured[d], control[d]) {
                let phi = identifiers[d].basis().basis_vector(measured[d], control[d]);
                if let UpdateOutcome::Applied { innovation: e } = identifiers[d].ekf_update(&phi, t)? {
                    innovation[d] = Some(e);
                }
            }
            measured[d] = z;
        }

        records.push(StepRecord {
            step: j,
            reference: *target,
            measured,
            true_state,
            control,
            innovation,
            wall_ns,
        });

        if let Some(every) = opts.snapshot_every.filter(|&e| e > 0) {
            if (j + 1) % every == 0 {
                snapshots.push((j + 1, [identifiers[0].snapshot(), identifiers[1].snapshot()]));
            }
        }
    }

    Ok(TrackingOutput {
        log: TrackingLog {
            controller: controllers[0].tag().to_string(),
            trajectory: String::new(),
            repeat: 0,
            seed: 0,
            records,
        },
        snapshots,
    })
}
