//! Conventional nonlinear MPC baseline: single shooting over the identified
//! model, projected gradient descent with central finite-difference
//! gradients and a backtracking line search.

use serde::{Deserialize, Serialize};

use crate::cost::QuadraticCost;
use crate::identifier::RbfIdentifier;
use crate::mppi::{shift_left, validate_bounds};
use crate::plant::{DofPlant, PositionMap};
use crate::tracking::{self, Controller, TrackOptions, TrackingOutput};
use crate::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    pub horizon: usize,
    pub state_weight: f64,
    pub control_weight: f64,
    pub terminal_weight: f64,
    pub max_solver_iters: usize,
    /// Finite-difference step, rad.
    pub gradient_step: f64,
    /// Stop once the gradient norm drops below this.
    pub convergence_tol: f64,
    pub control_bounds: [f64; 2],
    pub seed: u64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            state_weight: 0.2,
            control_weight: 0.6,
            terminal_weight: 17.0,
            max_solver_iters: 100,
            gradient_step: 1e-4,
            convergence_tol: 1e-6,
            control_bounds: [-1.5, 1.5],
            seed: 0,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let err = |field: &str, msg: String| Err(Error::config(format!("{prefix}.{field}"), msg));
        if self.horizon < 1 {
            return err("horizon", "must be at least 1".into());
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
        if self.max_solver_iters < 1 {
            return err("max_solver_iters", "must be at least 1".into());
        }
        if !(self.gradient_step > 0.0 && self.gradient_step.is_finite()) {
            return err("gradient_step", format!("must be positive, got {}", self.gradient_step));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return err("convergence_tol", format!("must be positive, got {}", self.convergence_tol));
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

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub controls: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each accepted iterate, starting with the initial guess.
    pub cost_history: Vec<f64>,
}

/// Solves from an all-zero initial sequence.
pub fn solve(x0: f64, x_desired: f64, model: &RbfIdentifier, cfg: &MpcConfig) -> Result<MpcSolution> {
    solve_from(x0, x_desired, model, cfg, &vec![0.0; cfg.horizon])
}

/// Solves from `initial`. Exhausting the iteration budget returns the best
/// iterate; a non-finite cost or gradient aborts.
pub fn solve_from(
    x0: f64,
    x_desired: f64,
    model: &RbfIdentifier,
    cfg: &MpcConfig,
    initial: &[f64],
) -> Result<MpcSolution> {
    if !(x0.is_finite() && x_desired.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite solver input x0={x0}, x_d={x_desired}")));
    }
    if initial.len() != cfg.horizon {
        return Err(Error::DimensionMismatch {
            expected: cfg.horizon,
            got: initial.len(),
        });
    }
    let [lo, hi] = cfg.control_bounds;
    let cost = cfg.cost();
    let eval = |u: &[f64]| cost.evaluate(x0, u, model, x_desired);
    let h = cfg.gradient_step;

    let mut u: Vec<f64> = initial.iter().map(|v| v.clamp(lo, hi)).collect();
    let mut j = eval(&u);
    if !j.is_finite() {
        return Err(Error::NonFiniteCost { iteration: 0, cost: j });
    }
    let mut history = vec![j];
    let mut grad = vec![0.0; u.len()];
    let mut probe = u.clone();
    let mut trial = u.clone();
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_solver_iters {
        probe.copy_from_slice(&u);
        for k in 0..u.len() {
            probe[k] = u[k] + h;
            let plus = eval(&probe);
            probe[k] = u[k] - h;
            let minus = eval(&probe);
            probe[k] = u[k];
            grad[k] = (plus - minus) / (2.0 * h);
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFiniteCost {
                iteration: iterations,
                cost: norm,
            });
        }
        if norm < cfg.convergence_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut accepted = false;
        while step >= MIN_STEP {
            for ((t, &ui), &g) in trial.iter_mut().zip(&u).zip(&grad) {
                *t = (ui - step * g).clamp(lo, hi);
            }
            let decrease: f64 = grad.iter().zip(&u).zip(&trial).map(|((g, a), b)| g * (a - b)).sum();
            let jt = eval(&trial);
            if jt.is_finite() && jt <= j - ARMIJO * decrease && jt <= j {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent direction left at machine precision
            break;
        }
        std::mem::swap(&mut u, &mut trial);
        j = eval(&u);
        history.push(j);
        step = (step * 2.0).min(MAX_STEP);
    }

    Ok(MpcSolution {
        controls: u,
        cost: j,
        iterations,
        converged,
        cost_history: history,
    })
}

/// MPC warm-started from its previous solution shifted by one step.
#[derive(Debug, Clone)]
pub struct MpcController {
    cfg: MpcConfig,
    warm: Vec<f64>,
    last: Option<MpcSolution>,
}

impl MpcController {
    pub fn new(cfg: MpcConfig) -> Self {
        Self {
            warm: vec![0.0; cfg.horizon],
            cfg,
            last: None,
        }
    }

    pub fn last_solution(&self) -> Option<&MpcSolution> {
        self.last.as_ref()
    }
}

impl Controller for MpcController {
    fn tag(&self) -> &'static str {
        "mpc"
    }

    fn plan(&mut self, x: f64, x_desired: f64, model: &RbfIdentifier) -> Result<f64> {
        let sol = solve_from(x, x_desired, model, &self.cfg, &self.warm)?;
        self.warm = shift_left(&sol.controls);
        let u = sol.controls[0];
        self.last = Some(sol);
        Ok(u)
    }
}

/// Tracks `reference` with one MPC per degree of freedom.
pub fn track_mpc<M: PositionMap>(
    plants: &mut [DofPlant<M>; 2],
    identifiers: &mut [RbfIdentifier; 2],
    reference: &[[f64; 2]],
    cfg: &MpcConfig,
    opts: &TrackOptions,
) -> Result<TrackingOutput> {
    let mut controllers = [MpcController::new(*cfg), MpcController::new(*cfg)];
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
    fn at_target_returns_zero() {
        let sol = solve(4.0, 4.0, &constant_model(30.0), &MpcConfig::default()).unwrap();
        assert!(sol.controls.iter().all(|u| u.abs() < 1e-6));
        assert!(sol.converged);
    }

    #[test]
    fn one_step_closed_form() {
        // J(u) = (Q + Q_H)(x0 + a u - x_d)² + R u²
        let a = 2.0;
        for q in [0.0, 0.2] {
            let cfg = MpcConfig {
                horizon: 1,
                state_weight: q,
                max_solver_iters: 500,
                ..Default::default()
            };
            let (x0, xd) = (1.0, 3.0);
            let w = cfg.terminal_weight + q;
            let expected = a * w * (xd - x0) / (cfg.control_weight + a * a * w);
            let sol = solve(x0, xd, &constant_model(a), &cfg).unwrap();
            assert!((sol.controls[0] - expected).abs() < 1e-3, "{} vs {expected}", sol.controls[0]);
        }
    }

    #[test]
    fn descent_is_monotone() {
        let sol = solve(0.0, 6.0, &constant_model(35.0), &MpcConfig::default()).unwrap();
        assert!(sol.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(sol.cost < sol.cost_history[0]);
    }

    #[test]
    fn respects_bounds() {
        let cfg = MpcConfig {
            control_bounds: [-0.01, 0.01],
            ..Default::default()
        };
        let sol = solve(0.0, 30.0, &constant_model(1.0), &cfg).unwrap();
        assert!(sol.controls.iter().all(|u| u.abs() <= 0.01));
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(solve(f64::NAN, 0.0, &constant_model(1.0), &MpcConfig::default()).is_err());
    }

    #[test]
    fn validation_names_field() {
        let cfg = MpcConfig {
            max_solver_iters: 0,
            ..Default::default()
        };
        match cfg.validate("mpc") {
            Err(Error::ConfigInvalid { path, .. }) => assert_eq!(path, "mpc.max_solver_iters"),
            other => panic!("{other:?}"),
        }
    }
}
