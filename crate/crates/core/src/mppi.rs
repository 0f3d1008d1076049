//! Model predictive path integral control on the identified model.
//!
//! Each control step perturbs a nominal sequence `M` times, rolls every
//! sample through a frozen copy of the identifier, weights samples by
//! `exp(-(J - min J)/λ)` and returns the weighted average. Only the first
//! element is applied; the average, shifted by one, becomes the next nominal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{saturate, QuadraticCost};
use crate::identifier::RbfIdentifier;
use crate::rng;
use crate::tracking::{self, Controller, TrackOptions, TrackingOutput};
use crate::plant::{DofPlant, PositionMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MppiConfig {
    pub num_samples: usize,
    pub horizon: usize,
    pub temperature: f64,
    /// Standard deviation of the control perturbation, rad.
    pub control_noise_std: f64,
    pub state_weight: f64,
    pub control_weight: f64,
    pub terminal_weight: f64,
    /// `[u_min, u_max]`, rad.
    pub control_bounds: [f64; 2],
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            num_samples: 20,
            horizon: 20,
            temperature: 0.01,
            control_noise_std: 0.005,
            state_weight: 0.2,
            control_weight: 0.6,
            terminal_weight: 17.0,
            control_bounds: [-1.5, 1.5],
            seed: 0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let err = |field: &str, msg: String| Err(Error::config(format!("{prefix}.{field}"), msg));
        if self.num_samples < 1 {
            return err("num_samples", "must be at least 1".into());
        }
        if self.horizon < 1 {
            return err("horizon", "must be at least 1".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return err("temperature", format!("must be positive, got {}", self.temperature));
        }
        if !(self.control_noise_std >= 0.0 && self.control_noise_std.is_finite()) {
            return err("control_noise_std", format!("must be non-negative, got {}", self.control_noise_std));
        }
        if !(self.state_weight >= 0.0 && self.state_weight.is_finite()) {
            return err("state_weight", format!("must be non-negative, got {}", self.state_weight));
        }
        if !(self.control_weight > 0.0 && self.control_weight.is_finite()) {
            return err("control_weight", format!("must be positive, got {}", self.control_weight));
        }
        if !(self.terminal_weight > 0.0 && self.terminal_weight.is_finite()) {
            return err("terminal_weight", format!("must be positive, got {}", self.terminal_weight));
        }
        validate_bounds(self.control_bounds, &format!("{prefix}.control_bounds"))
    }

    pub fn cost(&self) -> QuadraticCost {
        QuadraticCost {
            state_weight: self.state_weight,
            control_weight: self.control_weight,
            terminal_weight: self.terminal_weight,
        }
    }
}

pub(crate) fn validate_bounds(b: [f64; 2], path: &str) -> Result<()> {
    if !(b[0].is_finite() && b[1].is_finite() && b[0] <= 0.0 && 0.0 <= b[1] && b[0] < b[1]) {
        return Err(Error::config(path, format!("need u_min <= 0 <= u_max, got {b:?}")));
    }
    Ok(())
}

/// Sampled controls, predicted states and path costs of one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    /// `M` rows of `H` controls.
    pub controls: Vec<Vec<f64>>,
    /// `M` rows of `H + 1` states.
    pub states: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
}

/// Row `i` is `nominal + σ_u·ε` clamped to the bounds, with `ε` drawn from
/// the substream `derive(step_seed, i)`.
pub fn sample_controls(nominal: &[f64], cfg: &MppiConfig, step_seed: u64) -> Vec<Vec<f64>> {
    let [lo, hi] = cfg.control_bounds;
    (0..cfg.num_samples)
        .map(|i| {
            let mut r = rng::stream(rng::derive(step_seed, &[i as u64]));
            nominal
                .iter()
                .map(|&u| (u + cfg.control_noise_std * rng::normal(&mut r)).clamp(lo, hi))
                .collect()
        })
        .collect()
}

/// Predicted states and saturated path cost of one control sequence.
pub fn rollout(
    x0: f64,
    controls: &[f64],
    model: &RbfIdentifier,
    x_desired: f64,
    cfg: &MppiConfig,
) -> (Vec<f64>, f64) {
    let (states, cost) = cfg.cost().rollout(x0, controls, model, x_desired);
    (states, saturate(cost))
}

/// `exp(-(J_i - min J)/λ)`.
pub fn control_weights(costs: &[f64], temperature: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    costs
        .iter()
        .map(|j| (-(j - min) / temperature).exp())
        .collect()
}

/// Column-wise weighted average of the sampled sequences.
pub fn optimal_control(samples: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    // Accumulate offsets from the first row so that identical rows come back
    // bit-exact instead of picking up rounding from Σ w_i/Σw ≠ 1.
    let Some(base) = samples.first() else {
        return Ok(Vec::new());
    };
    let mut out = base.clone();
    for (row, w) in samples.iter().zip(weights).skip(1) {
        let w = w / total;
        for ((o, u), b) in out.iter_mut().zip(row).zip(base) {
            *o += w * (u - b);
        }
    }
    Ok(out)
}

/// Rolls out every sample against the same frozen model.
pub fn evaluate_batch(
    x0: f64,
    controls: Vec<Vec<f64>>,
    model: &RbfIdentifier,
    x_desired: f64,
    cfg: &MppiConfig,
    parallel: bool,
) -> RolloutBatch {
    let results: Vec<(Vec<f64>, f64)> = if parallel {
        controls
            .par_iter()
            .map(|row| rollout(x0, row, model, x_desired, cfg))
            .collect()
    } else {
        controls
            .iter()
            .map(|row| rollout(x0, row, model, x_desired, cfg))
            .collect()
    };
    let (states, costs) = results.into_iter().unzip();
    RolloutBatch {
        controls,
        states,
        costs,
    }
}

#[derive(Debug, Clone)]
pub struct MppiPlan {
    pub sequence: Vec<f64>,
    pub batch: RolloutBatch,
}

/// Receding-horizon MPPI with a warm-started nominal sequence.
#[derive(Debug, Clone)]
pub struct MppiController {
    cfg: MppiConfig,
    nominal: Vec<f64>,
    seed: u64,
    step: u64,
    parallel: bool,
}

impl MppiController {
    pub fn new(cfg: MppiConfig, seed: u64) -> Self {
        Self {
            nominal: vec![0.0; cfg.horizon],
            cfg,
            seed,
            step: 0,
            parallel: false,
        }
    }

    pub fn with_parallel_rollouts(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn config(&self) -> &MppiConfig {
        &self.cfg
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }

    /// Runs one sampling/weighting round and advances the warm start.
    pub fn plan_sequence(&mut self, x: f64, x_desired: f64, model: &RbfIdentifier) -> Result<MppiPlan> {
        let step_seed = rng::derive(self.seed, &[self.step]);
        self.step += 1;
        let samples = sample_controls(&self.nominal, &self.cfg, step_seed);
        let batch = evaluate_batch(x, samples, model, x_desired, &self.cfg, self.parallel);
        let weights = control_weights(&batch.costs, self.cfg.temperature);
        let sequence = optimal_control(&batch.controls, &weights)?;
        self.nominal = shift_left(&sequence);
        Ok(MppiPlan { sequence, batch })
    }
}

/// Drops the first element and repeats the last.
pub fn shift_left(seq: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = seq.iter().skip(1).copied().collect();
    if let Some(&last) = seq.last() {
        out.push(last);
    }
    out
}

impl Controller for MppiController {
    fn tag(&self) -> &'static str {
        "mppi"
    }

    fn plan(&mut self, x: f64, x_desired: f64, model: &RbfIdentifier) -> Result<f64> {
        Ok(self.plan_sequence(x, x_desired, model)?.sequence[0])
    }
}

/// Tracks `reference` with one MPPI controller per degree of freedom.
pub fn track<M: PositionMap>(
    plants: &mut [DofPlant<M>; 2],
    identifiers: &mut [RbfIdentifier; 2],
    reference: &[[f64; 2]],
    cfg: &MppiConfig,
    seeds: [u64; 2],
    opts: &TrackOptions,
) -> Result<TrackingOutput> {
    let mut controllers = seeds.map(|s| MppiController::new(*cfg, s));
    tracking::run(plants, identifiers, &mut controllers, reference, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifier::RbfBasis;
    use nalgebra::{DMatrix, DVector};

    fn constant_model(a: f64) -> RbfIdentifier {
        RbfIdentifier::new(
            RbfBasis::new(vec![[0.0, 0.0]], vec![1e6]).unwrap(),
            DVector::from_element(1, a),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_rows_equal_nominal() {
        let cfg = MppiConfig {
            control_noise_std: 0.0,
            ..Default::default()
        };
        let nominal: Vec<f64> = (0..cfg.horizon).map(|k| 0.01 * k as f64).collect();
        for row in sample_controls(&nominal, &cfg, 3) {
            assert_eq!(row, nominal);
        }
    }

    #[test]
    fn samples_respect_bounds() {
        let cfg = MppiConfig {
            control_noise_std: 5.0,
            ..Default::default()
        };
        let rows = sample_controls(&vec![1.4; cfg.horizon], &cfg, 9);
        assert!(rows.iter().flatten().all(|u| (-1.5..=1.5).contains(u)));
    }

    #[test]
    fn sample_noise_moment() {
        let cfg = MppiConfig {
            num_samples: 5000,
            control_noise_std: 0.01,
            control_bounds: [-100.0, 100.0],
            ..Default::default()
        };
        let rows = sample_controls(&vec![0.0; cfg.horizon], &cfg, 1);
        let all: Vec<f64> = rows.into_iter().flatten().collect();
        assert_eq!(all.len(), 100_000);
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let sd = (all.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 0.01).abs() < 0.0002, "{sd}");
    }

    #[test]
    fn rollout_at_target_costs_nothing() {
        let cfg = MppiConfig::default();
        let (states, j) = rollout(3.0, &[0.0; 20], &constant_model(7.0), 3.0, &cfg);
        assert_eq!(j, 0.0);
        assert!(states.iter().all(|&x| x == 3.0));
    }

    #[test]
    fn single_step_hand_value() {
        let cfg = MppiConfig {
            horizon: 1,
            state_weight: 1.0,
            control_weight: 1.0,
            terminal_weight: 1.0,
            ..Default::default()
        };
        let (states, j) = rollout(0.0, &[0.0], &constant_model(2.0), 1.0, &cfg);
        assert_eq!(states, vec![0.0, 0.0]);
        assert_eq!(j, 2.0);
    }

    #[test]
    fn diverging_rollout_is_saturated() {
        let cfg = MppiConfig::default();
        let (_, j) = rollout(0.0, &[1.5; 20], &constant_model(1e200), 0.0, &cfg);
        assert_eq!(j, crate::cost::DIVERGED_COST);
    }

    #[test]
    fn weights_hand_values() {
        let l = 0.01;
        assert_eq!(control_weights(&[4.0, 4.0, 4.0], l), vec![1.0; 3]);
        let w = control_weights(&[0.0, l], l);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn weighted_average_hand_value() {
        let samples = vec![vec![0.0], vec![1.0]];
        let w = [1.0, (-1.0f64).exp()];
        let u = optimal_control(&samples, &w).unwrap();
        let e = (-1.0f64).exp();
        assert!((u[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((u[0] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn single_sample_returned_verbatim() {
        let samples = vec![vec![0.1, -0.2, 0.3]];
        assert_eq!(optimal_control(&samples, &[0.7]).unwrap(), samples[0]);
    }

    #[test]
    fn equal_weights_give_column_means() {
        let samples = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let out = optimal_control(&samples, &[0.5; 3]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12 && (out[1] - 1.0).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(matches!(
            optimal_control(&[vec![1.0]], &[0.0]),
            Err(Error::DegenerateWeights)
        ));
    }

    #[test]
    fn warm_start_shift() {
        assert_eq!(shift_left(&[1.0, 2.0, 3.0]), vec![2.0, 3.0, 3.0]);
        assert_eq!(shift_left(&[5.0]), vec![5.0]);
    }

    #[test]
    fn controller_is_deterministic() {
        let model = constant_model(40.0);
        let mut a = MppiController::new(MppiConfig::default(), 11);
        let mut b = MppiController::new(MppiConfig::default(), 11).with_parallel_rollouts(true);
        for k in 0..5 {
            let xd = k as f64;
            assert_eq!(a.plan(0.5, xd, &model).unwrap(), b.plan(0.5, xd, &model).unwrap());
        }
        assert_eq!(a.nominal(), b.nominal());
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = MppiConfig {
            temperature: 0.0,
            ..Default::default()
        };
        match cfg.validate("mppi") {
            Err(Error::ConfigInvalid { path, .. }) => assert_eq!(path, "mppi.temperature"),
            other => panic!("{other:?}"),
        }
        assert!(MppiConfig::default().validate("mppi").is_ok());
    }
}
