//! Finite-horizon quadratic tracking cost over rollouts of the identified model.

use crate::identifier::RbfIdentifier;

/// Cost assigned to rollouts whose state or cost stops being finite.
pub const DIVERGED_COST: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub state_weight: f64,
    pub control_weight: f64,
    pub terminal_weight: f64,
}

impl QuadraticCost {
    /// Propagates `x⁺ = x + f̂(x, u)·u` and accumulates
    /// `Σ Q(x⁺ - x_d)² + R u²` plus `Q_H (x_H - x_d)²`. The stage term is
    /// charged on the post-step state. May return a non-finite value.
    pub fn evaluate(&self, x0: f64, controls: &[f64], model: &RbfIdentifier, x_desired: f64) -> f64 {
        let mut x = x0;
        let mut cost = 0.0;
        for &u in controls {
            x += model.predict(x, u) * u;
            let e = x - x_desired;
            cost += self.state_weight * e * e + self.control_weight * u * u;
        }
        let e = x - x_desired;
        cost + self.terminal_weight * e * e
    }

    /// Same as [`evaluate`](Self::evaluate) but also returns the `H + 1`
    /// predicted states.
    pub fn rollout(
        &self,
        x0: f64,
        controls: &[f64],
        model: &RbfIdentifier,
        x_desired: f64,
    ) -> (Vec<f64>, f64) {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0);
        let mut x = x0;
        let mut cost = 0.0;
        for &u in controls {
            x += model.predict(x, u) * u;
            states.push(x);
            let e = x - x_desired;
            cost += self.state_weight * e * e + self.control_weight * u * u;
        }
        let e = x - x_desired;
        (states, cost + self.terminal_weight * e * e)
    }
}

/// Maps non-finite or oversized costs to [`DIVERGED_COST`].
pub fn saturate(cost: f64) -> f64 {
    if cost.is_finite() {
        cost.min(DIVERGED_COST)
    } else {
        DIVERGED_COST
    }
}
