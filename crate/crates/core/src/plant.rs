//! The simulated robot: incremental dynamics reconstructed from a position
//! map, plus state-dependent process noise, an environmental load and a
//! noisy sensor. Pitch and yaw are independent scalar plants.

use serde::{Deserialize, Serialize};

use crate::gmm::{GmrMap, GroundTruth};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Hard mechanical range of the bend angle, deg.
pub const MECHANICAL_LIMIT_DEG: f64 = 90.0;

/// Below this motor angle (rad) the secant `(g(u) - x) / u` is replaced by
/// the slope of the map, and identifier updates are skipped.
pub const CONTROL_EPS: f64 = 1e-4;

/// Steady-state bend angle (deg) reached for a held motor angle (rad).
pub trait PositionMap {
    fn position(&self, u: f64) -> f64;
    fn slope(&self, u: f64) -> f64;
}

impl PositionMap for GmrMap {
    fn position(&self, u: f64) -> f64 {
        self.mean(u)
    }

    fn slope(&self, u: f64) -> f64 {
        GmrMap::slope(self, u)
    }
}

impl PositionMap for GroundTruth {
    fn position(&self, u: f64) -> f64 {
        self.eval(u)
    }

    fn slope(&self, u: f64) -> f64 {
        GroundTruth::slope(self, u)
    }
}

impl<M: PositionMap + ?Sized> PositionMap for &M {
    fn position(&self, u: f64) -> f64 {
        (**self).position(u)
    }

    fn slope(&self, u: f64) -> f64 {
        (**self).slope(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dof {
    Pitch,
    Yaw,
}

impl Dof {
    pub const ALL: [Dof; 2] = [Dof::Pitch, Dof::Yaw];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dof::Pitch => "pitch",
            Dof::Yaw => "yaw",
        }
    }

    pub fn ground_truth(self) -> GroundTruth {
        match self {
            Dof::Pitch => GroundTruth::pitch(),
            Dof::Yaw => GroundTruth::yaw(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceConfig {
    /// Process-noise std per unit of |x|.
    pub process_scale: f64,
    pub load_gain: f64,
    /// rad per deg inside the load's sine.
    pub load_frequency: f64,
    /// deg
    pub measurement_noise_std: f64,
    pub observation_gain: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            process_scale: 0.02,
            load_gain: 0.03,
            load_frequency: 10.0,
            measurement_noise_std: 0.05,
            observation_gain: 1.0,
        }
    }
}

impl DisturbanceConfig {
    /// No noise, no load, unit sensor gain.
    pub fn disturbance_free() -> Self {
        Self {
            process_scale: 0.0,
            load_gain: 0.0,
            load_frequency: 0.0,
            measurement_noise_std: 0.0,
            observation_gain: 1.0,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let fields = [
            ("process_scale", self.process_scale),
            ("load_gain", self.load_gain),
            ("load_frequency", self.load_frequency),
            ("measurement_noise_std", self.measurement_noise_std),
            ("observation_gain", self.observation_gain),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Environmental load `gain · x · sin(frequency · x)` with x in deg.
    pub fn load(&self, x: f64) -> f64 {
        self.load_gain * x * (self.load_frequency * x).sin()
    }

    pub fn process_std(&self, x: f64) -> f64 {
        self.process_scale * x.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Bend angle, deg.
    pub x: f64,
    /// Last applied motor angle, rad.
    pub u_prev: f64,
}

impl PlantState {
    pub fn new(x: f64, u_prev: f64) -> Self {
        Self { x, u_prev }
    }
}

/// `f(x, u)` with `x + f·u = g(u)`; the slope of `g` near `u = 0`.
pub fn true_increment<M: PositionMap>(map: &M, x: f64, u: f64) -> f64 {
    if u.abs() >= CONTROL_EPS {
        (map.position(u) - x) / u
    } else {
        map.slope(u)
    }
}

/// One plant step. Exactly one normal draw is taken from `rng`.
pub fn step<M: PositionMap>(
    map: &M,
    state: PlantState,
    u: f64,
    rng: &mut Stream,
    cfg: &DisturbanceConfig,
) -> Result<PlantState> {
    if !u.is_finite() {
        return Err(Error::NonFiniteControl(u));
    }
    let x = state.x;
    let noise = cfg.process_std(x) * rng::normal(rng);
    let next = x + true_increment(map, x, u) * u + cfg.load(x) + noise;
    Ok(PlantState {
        x: next.clamp(-MECHANICAL_LIMIT_DEG, MECHANICAL_LIMIT_DEG),
        u_prev: u,
    })
}

/// Sensor reading `H·x + v`. Exactly one normal draw is taken from `rng`.
pub fn observe(state: &PlantState, rng: &mut Stream, cfg: &DisturbanceConfig) -> f64 {
    cfg.observation_gain * state.x + cfg.measurement_noise_std * rng::normal(rng)
}

/// A single degree of freedom with its own process and sensor streams.
#[derive(Debug, Clone)]
pub struct DofPlant<M> {
    map: M,
    cfg: DisturbanceConfig,
    state: PlantState,
    process_rng: Stream,
    sensor_rng: Stream,
}

impl<M: PositionMap> DofPlant<M> {
    pub fn new(map: M, cfg: DisturbanceConfig, initial: PlantState, seed: u64) -> Self {
        Self {
            map,
            cfg,
            state: initial,
            process_rng: rng::stream(rng::derive(seed, &[rng::label("process")])),
            sensor_rng: rng::stream(rng::derive(seed, &[rng::label("sensor")])),
        }
    }

    pub fn state(&self) -> PlantState {
        self.state
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    pub fn step(&mut self, u: f64) -> Result<PlantState> {
        self.state = step(&self.map, self.state, u, &mut self.process_rng, &self.cfg)?;
        Ok(self.state)
    }

    pub fn observe(&mut self) -> f64 {
        observe(&self.state, &mut self.sensor_rng, &self.cfg)
    }
}
