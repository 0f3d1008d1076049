use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gmm::EmOptions;
use crate::identifier::FilterSettings;
use crate::mpc::MpcConfig;
use crate::mppi::MppiConfig;
use crate::plant::DisturbanceConfig;
use crate::trajectory::{TrajectoryKind, TrajectorySpec};
use crate::{Error, Result};

/// Everything one comparison run needs. Every field has a default, so `{}`
/// is a complete config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: DisturbanceConfig,
    pub gmm: GmmSection,
    pub identifier: IdentifierSection,
    pub mppi: MppiConfig,
    pub mpc: MpcConfig,
    pub trajectories: Vec<TrajectorySpec>,
    pub repeats: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Runs executed concurrently. Anything above 1 lets runs contend for
    /// cores, so per-step timings are only comparable with 1.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plant: DisturbanceConfig::default(),
            gmm: GmmSection::default(),
            identifier: IdentifierSection::default(),
            mppi: MppiConfig::default(),
            mpc: MpcConfig::default(),
            trajectories: TrajectoryKind::ALL.iter().map(|&k| TrajectorySpec::new(k)).collect(),
            repeats: 5,
            master_seed: 0,
            output_dir: PathBuf::from("runs/default"),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmSection {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Synthetic (u, x) samples drawn per degree of freedom.
    pub samples_per_dof: usize,
    /// deg
    pub noise_std: f64,
}

impl Default for GmmSection {
    fn default() -> Self {
        let em = EmOptions::default();
        Self {
            k: em.k,
            seed: em.seed,
            max_iter: em.max_iter,
            tol: em.tol,
            samples_per_dof: 2000,
            noise_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifierSection {
    pub num_basis: usize,
    pub p0_scale: f64,
    pub q_scale: f64,
    pub r: f64,
    /// Length of the random walk in u whose samples place the RBF centers.
    pub excitation_steps: usize,
    /// rad per step
    pub excitation_step_std: f64,
    /// rad
    pub excitation_limit: f64,
    /// Identifier snapshot period in steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for IdentifierSection {
    fn default() -> Self {
        let f = FilterSettings::default();
        Self {
            num_basis: 10,
            p0_scale: f.p0_scale,
            q_scale: f.q_scale,
            r: f.r,
            excitation_steps: 50,
            excitation_step_std: 0.05,
            excitation_limit: 0.4,
            snapshot_every: 50,
        }
    }
}

impl IdentifierSection {
    pub fn filter(&self) -> FilterSettings {
        FilterSettings {
            p0_scale: self.p0_scale,
            q_scale: self.q_scale,
            r: self.r,
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be non-negative, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates. Errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn em_options(&self) -> EmOptions {
        EmOptions {
            k: self.gmm.k,
            seed: self.gmm.seed,
            max_iter: self.gmm.max_iter,
            tol: self.gmm.tol,
            dim_in: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate("plant")?;
        self.mppi.validate("mppi")?;
        self.mpc.validate("mpc")?;

        let g = &self.gmm;
        if g.k < 1 {
            return Err(Error::config("gmm.k", "must be at least 1"));
        }
        if g.max_iter < 1 {
            return Err(Error::config("gmm.max_iter", "must be at least 1"));
        }
        positive("gmm.tol", g.tol)?;
        if g.samples_per_dof < g.k {
            return Err(Error::config(
                "gmm.samples_per_dof",
                format!("must be at least gmm.k ({}), got {}", g.k, g.samples_per_dof),
            ));
        }
        non_negative("gmm.noise_std", g.noise_std)?;

        let id = &self.identifier;
        if id.num_basis < 1 {
            return Err(Error::config("identifier.num_basis", "must be at least 1"));
        }
        positive("identifier.p0_scale", id.p0_scale)?;
        non_negative("identifier.q_scale", id.q_scale)?;
        positive("identifier.r", id.r)?;
        if id.excitation_steps < id.num_basis {
            return Err(Error::config(
                "identifier.excitation_steps",
                format!("must be at least identifier.num_basis ({}), got {}", id.num_basis, id.excitation_steps),
            ));
        }
        non_negative("identifier.excitation_step_std", id.excitation_step_std)?;
        positive("identifier.excitation_limit", id.excitation_limit)?;

        if self.trajectories.is_empty() {
            return Err(Error::config("trajectories", "need at least one trajectory"));
        }
        for (i, spec) in self.trajectories.iter().enumerate() {
            spec.validate(&format!("trajectories[{i}]"))?;
            if self.trajectories[..i].iter().any(|s| s.kind == spec.kind) {
                return Err(Error::config(format!("trajectories[{i}].kind"), format!("duplicate trajectory `{}`", spec.kind)));
            }
        }
        if self.repeats < 1 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if self.workers < 1 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        Ok(())
    }
}
