use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;

use crate::rng;
use crate::{Error, Result};

/// Samples in the joint space. For the snake model each sample is
/// `(u, x)`: motor angle in rad followed by bend angle in deg.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    samples: Vec<DVector<f64>>,
}

impl Dataset {
    pub fn new(samples: Vec<DVector<f64>>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample(i));
            }
        }
        Ok(Self { dim, samples })
    }

    /// `(u_rad, x_deg)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(u, x)| DVector::from_vec(vec![u, x]))
                .collect(),
        )
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| DVector::from_element(1, v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.trim() == "u_rad,x_deg" => {}
            Some((_, h)) => return Err(parse_err(format!("expected header `u_rad,x_deg`, found `{h}`"))),
            None => return Err(Error::EmptyDataset),
        }
        let mut pairs = Vec::new();
        for (n, line) in lines {
            let mut cols = line.split(',').map(str::trim);
            let mut next = || -> Result<f64> {
                cols.next()
                    .ok_or_else(|| parse_err(format!("line {}: missing column", n + 1)))?
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("line {}: {e}", n + 1)))
            };
            let u = next()?;
            let x = next()?;
            pairs.push((u, x));
        }
        Self::from_pairs(&pairs)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim,
            });
        }
        let mut out = String::from("u_rad,x_deg\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s[0], s[1]));
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Saturating input-output curve `x = A·tanh(B·u) + C·u` used in place of
/// measured robot data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    /// deg
    pub amplitude: f64,
    /// 1/rad
    pub steepness: f64,
    /// deg/rad
    pub linear: f64,
}

impl GroundTruth {
    pub const fn pitch() -> Self {
        Self {
            amplitude: 35.0,
            steepness: 1.2,
            linear: 3.0,
        }
    }

    pub const fn yaw() -> Self {
        Self {
            amplitude: 35.0,
            steepness: 1.0,
            linear: 3.0,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.amplitude * (self.steepness * u).tanh() + self.linear * u
    }

    pub fn slope(&self, u: f64) -> f64 {
        let t = (self.steepness * u).tanh();
        self.amplitude * self.steepness * (1.0 - t * t) + self.linear
    }
}

/// Draws `n` samples with `u ~ U[-1.5, 1.5]` rad and `x = g(u) + N(0, noise_std²)`.
pub fn synthesize(truth: &GroundTruth, n: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    let mut r = rng::stream(seed);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let u = r.random_range(-1.5..=1.5);
            let x = truth.eval(u) + noise_std * rng::normal(&mut r);
            (u, x)
        })
        .collect();
    Dataset::from_pairs(&pairs)
}
