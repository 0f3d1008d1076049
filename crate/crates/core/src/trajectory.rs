//! Closed reference curves in (pitch, yaw) space, deg.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    OvalHorizontal,
    OvalVertical,
    InfinityHorizontal,
    InfinityVertical,
    Star,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 5] = [
        TrajectoryKind::OvalHorizontal,
        TrajectoryKind::OvalVertical,
        TrajectoryKind::InfinityHorizontal,
        TrajectoryKind::InfinityVertical,
        TrajectoryKind::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrajectoryKind::OvalHorizontal => "oval_horizontal",
            TrajectoryKind::OvalVertical => "oval_vertical",
            TrajectoryKind::InfinityHorizontal => "infinity_horizontal",
            TrajectoryKind::InfinityVertical => "infinity_vertical",
            TrajectoryKind::Star => "star",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    /// Major amplitude, or outer radius for the star. deg
    #[serde(default = "default_major")]
    pub amplitude_major: f64,
    /// Minor amplitude, or inner radius for the star. deg
    #[serde(default = "default_minor")]
    pub amplitude_minor: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_major() -> f64 {
    10.0
}

fn default_minor() -> f64 {
    5.0
}

fn default_points() -> usize {
    200
}

impl TrajectorySpec {
    pub fn new(kind: TrajectoryKind) -> Self {
        Self {
            kind,
            amplitude_major: default_major(),
            amplitude_minor: default_minor(),
            points: default_points(),
        }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.points < 2 {
            return Err(Error::config(format!("{prefix}.points"), "need at least 2 points"));
        }
        for (name, v) in [
            ("amplitude_major", self.amplitude_major),
            ("amplitude_minor", self.amplitude_minor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{prefix}.{name}"), format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Star radius at polar angle `t`: `outer` at the five tips
/// (`π/2 + 2πk/5`), `inner` halfway between, linear in angle.
pub fn star_radius(t: f64, outer: f64, inner: f64) -> f64 {
    let half = PI / 5.0;
    let phase = (t - FRAC_PI_2).rem_euclid(2.0 * half);
    let from_tip = phase.min(2.0 * half - phase);
    outer - (outer - inner) * from_tip / half
}

/// `T` points `[pitch, yaw]` at `t_j = 2πj/T`, counter-clockwise from `t = 0`.
pub fn generate(spec: &TrajectorySpec) -> Result<Vec<[f64; 2]>> {
    spec.validate("trajectory")?;
    let (a, b) = (spec.amplitude_major, spec.amplitude_minor);
    let n = spec.points;
    Ok((0..n)
        .map(|j| {
            let t = TAU * j as f64 / n as f64;
            // (yaw, pitch)
            let (yaw, pitch) = match spec.kind {
                TrajectoryKind::OvalHorizontal => (a * t.cos(), b * t.sin()),
                TrajectoryKind::OvalVertical => (b * t.cos(), a * t.sin()),
                TrajectoryKind::InfinityHorizontal => (a * t.cos(), 2.0 * b * t.sin() * t.cos()),
                TrajectoryKind::InfinityVertical => (2.0 * b * t.sin() * t.cos(), a * t.cos()),
                TrajectoryKind::Star => {
                    let r = star_radius(t, a, b);
                    (r * t.cos(), r * t.sin())
                }
            };
            [pitch, yaw]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oval_starts_on_yaw_axis() {
        let p = generate(&TrajectorySpec::new(TrajectoryKind::OvalHorizontal)).unwrap();
        assert_eq!(p.len(), 200);
        assert_eq!(p[0], [0.0, 10.0]);
    }

    #[test]
    fn star_radii_alternate() {
        for k in 0..5 {
            let tip = FRAC_PI_2 + TAU * k as f64 / 5.0;
            assert!((star_radius(tip, 10.0, 5.0) - 10.0).abs() < 1e-12);
            assert!((star_radius(tip + PI / 5.0, 10.0, 5.0) - 5.0).abs() < 1e-12);
        }
        let mut t = 0.0;
        while t < TAU {
            let r = star_radius(t, 10.0, 5.0);
            assert!((5.0 - 1e-12..=10.0 + 1e-12).contains(&r));
            t += 0.001;
        }
    }

    #[test]
    fn parse_names() {
        for k in TrajectoryKind::ALL {
            assert_eq!(k.name().parse::<TrajectoryKind>().unwrap(), k);
        }
        assert!(matches!("circle".parse::<TrajectoryKind>(), Err(Error::UnknownKind(_))));
    }

    #[test]
    fn rejects_degenerate_specs() {
        let mut s = TrajectorySpec::new(TrajectoryKind::Star).with_points(1);
        assert!(generate(&s).is_err());
        s.points = 10;
        s.amplitude_minor = 0.0;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn amplitudes_reached() {
        let n = 400;
        for kind in TrajectoryKind::ALL {
            let p = generate(&TrajectorySpec::new(kind).with_points(n)).unwrap();
            let max_pitch = p.iter().map(|q| q[0].abs()).fold(0.0, f64::max);
            let max_yaw = p.iter().map(|q| q[1].abs()).fold(0.0, f64::max);
            let (ep, ey) = match kind {
                TrajectoryKind::OvalHorizontal | TrajectoryKind::InfinityHorizontal => (5.0, 10.0),
                TrajectoryKind::OvalVertical | TrajectoryKind::InfinityVertical => (10.0, 5.0),
                TrajectoryKind::Star => (10.0, 10.0 * (TAU / 5.0 - FRAC_PI_2).cos().max((PI / 10.0).cos())),
            };
            assert!((max_pitch - ep).abs() < 0.01, "{kind} pitch {max_pitch}");
            assert!((max_yaw - ey).abs() < 0.05, "{kind} yaw {max_yaw}");
        }
    }
}
