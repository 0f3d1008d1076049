//! The comparison protocol: fit the surrogate plants, then for every
//! trajectory, controller and repeat excite a fresh plant, seed a fresh
//! identifier, track, and persist the log. Reports and plots are computed
//! from the logs only.
//!
//! Seeds fan out from `master_seed` by key path. The plant, excitation and
//! identifier streams of a run depend on (trajectory, repeat) but not on the
//! controller, so both controllers face the same disturbance realisation.
//! Controller streams additionally fold in their config section's `seed`.

mod config;
pub mod logs;
pub mod plot;
mod report;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use config::{ExperimentConfig, GmmSection, IdentifierSection};
pub use plot::emit_plots;
pub use report::{rmse, ComparisonReport, ReportRow};

use crate::gmm::{fit_em, synthesize, GmmModel, GmrMap};
use crate::identifier::{IdentifierSnapshot, RbfBasis, RbfIdentifier};
use crate::mpc::MpcController;
use crate::mppi::MppiController;
use crate::plant::{Dof, DofPlant, PlantState, PositionMap};
use crate::rng;
use crate::tracking::{self, TrackOptions, TrackingLog};
use crate::trajectory::{generate, TrajectorySpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Mpc,
    Mppi,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 2] = [ControllerKind::Mpc, ControllerKind::Mppi];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Mpc => "mpc",
            ControllerKind::Mppi => "mppi",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown controller `{s}` (expected mpc or mppi)")))
    }
}

/// Fitted GMMs and their regression maps, `[pitch, yaw]`.
#[derive(Debug, Clone)]
pub struct SurrogatePlants {
    pub models: [GmmModel; 2],
    pub maps: [GmrMap; 2],
}

/// Fits one GMM per degree of freedom on synthetic data from its ground truth.
pub fn fit_plants(cfg: &ExperimentConfig) -> Result<SurrogatePlants> {
    let fit = |dof: Dof| -> Result<(GmmModel, GmrMap)> {
        let data_seed = rng::derive(cfg.master_seed, &[rng::label("gmm-data"), rng::label(dof.name())]);
        let data = synthesize(&dof.ground_truth(), cfg.gmm.samples_per_dof, cfg.gmm.noise_std, data_seed)?;
        let mut opts = cfg.em_options();
        opts.seed = rng::derive(cfg.master_seed, &[rng::label("gmm-em"), cfg.gmm.seed, rng::label(dof.name())]);
        let model = fit_em(&data, &opts)?.model;
        let map = GmrMap::new(&model)?;
        Ok((model, map))
    };
    let (pm, pmap) = fit(Dof::Pitch)?;
    let (ym, ymap) = fit(Dof::Yaw)?;
    Ok(SurrogatePlants {
        models: [pm, ym],
        maps: [pmap, ymap],
    })
}

/// Seed shared by everything in one (trajectory, repeat) cell.
pub fn run_seed(master_seed: u64, spec: &TrajectorySpec, repeat: usize) -> u64 {
    rng::derive(master_seed, &[rng::label("run"), rng::label(spec.kind.name()), repeat as u64])
}

/// Random walk in u on a fresh plant; returns the `(x measured, u)` pairs
/// that place the RBF centers.
pub fn excitation_samples<M: PositionMap>(map: M, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<(f64, f64)>> {
    let id = &cfg.identifier;
    let mut plant = DofPlant::new(map, cfg.plant, PlantState::new(0.0, 0.0), rng::derive(seed, &[rng::label("plant")]));
    let mut walk = rng::stream(rng::derive(seed, &[rng::label("walk")]));
    let mut x = plant.observe();
    let mut u = 0.0_f64;
    let mut samples = Vec::with_capacity(id.excitation_steps);
    for _ in 0..id.excitation_steps {
        u = (u + id.excitation_step_std * rng::normal(&mut walk)).clamp(-id.excitation_limit, id.excitation_limit);
        samples.push((x, u));
        plant.step(u)?;
        x = plant.observe();
    }
    Ok(samples)
}

/// Excitation, center placement and seeded weights for one degree of freedom.
pub fn initial_identifier<M: PositionMap>(map: M, cfg: &ExperimentConfig, seed: u64) -> Result<RbfIdentifier> {
    let samples = excitation_samples(map, cfg, rng::derive(seed, &[rng::label("excite")]))?;
    let basis = RbfBasis::from_samples(&samples, cfg.identifier.num_basis, rng::derive(seed, &[rng::label("kmeans")]))?;
    let mut init = rng::stream(rng::derive(seed, &[rng::label("weights")]));
    RbfIdentifier::seeded(basis, &cfg.identifier.filter(), &mut init)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TrackingLog,
    /// `(steps completed, [pitch, yaw])`, always ending with the final step.
    pub snapshots: Vec<(usize, [IdentifierSnapshot; 2])>,
}

/// One full track of `spec` with a fresh plant and identifier.
pub fn run_one(
    cfg: &ExperimentConfig,
    plants: &SurrogatePlants,
    spec: &TrajectorySpec,
    controller: ControllerKind,
    repeat: usize,
) -> Result<RunOutput> {
    let seed = run_seed(cfg.master_seed, spec, repeat);
    let reference = generate(spec)?;
    let dof_seed = |d: Dof| rng::derive(seed, &[rng::label(d.name())]);

    let mut identifiers = [
        initial_identifier(&plants.maps[0], cfg, rng::derive(dof_seed(Dof::Pitch), &[rng::label("identifier")]))?,
        initial_identifier(&plants.maps[1], cfg, rng::derive(dof_seed(Dof::Yaw), &[rng::label("identifier")]))?,
    ];
    let plant = |d: Dof| {
        let s = rng::derive(dof_seed(d), &[rng::label("plant")]);
        DofPlant::new(&plants.maps[d.index()], cfg.plant, PlantState::new(0.0, 0.0), s)
    };
    let mut dof_plants = [plant(Dof::Pitch), plant(Dof::Yaw)];
    let opts = TrackOptions {
        snapshot_every: Some(cfg.identifier.snapshot_every).filter(|&n| n > 0),
    };

    let mut out = match controller {
        ControllerKind::Mppi => {
            let ctrl_seed = |d: Dof| {
                rng::derive(
                    cfg.master_seed,
                    &[rng::label("mppi"), cfg.mppi.seed, rng::label(spec.kind.name()), repeat as u64, rng::label(d.name())],
                )
            };
            let mut ctrls = [
                MppiController::new(cfg.mppi, ctrl_seed(Dof::Pitch)),
                MppiController::new(cfg.mppi, ctrl_seed(Dof::Yaw)),
            ];
            tracking::run(&mut dof_plants, &mut identifiers, &mut ctrls, &reference, &opts)?
        }
        ControllerKind::Mpc => {
            let mut ctrls = [MpcController::new(cfg.mpc), MpcController::new(cfg.mpc)];
            tracking::run(&mut dof_plants, &mut identifiers, &mut ctrls, &reference, &opts)?
        }
    };

    if opts.snapshot_every.is_some() && out.snapshots.last().map(|s| s.0) != Some(reference.len()) {
        out.snapshots
            .push((reference.len(), [identifiers[0].snapshot(), identifiers[1].snapshot()]));
    }
    out.log.trajectory = spec.kind.name().to_string();
    out.log.repeat = repeat;
    out.log.seed = seed;
    Ok(RunOutput {
        log: out.log,
        snapshots: out.snapshots,
    })
}

/// Canonical order: config trajectory order, then MPC before MPPI, then repeat.
fn run_plan(cfg: &ExperimentConfig) -> Vec<(TrajectorySpec, ControllerKind, usize)> {
    let mut plan = Vec::new();
    for spec in &cfg.trajectories {
        for ctrl in ControllerKind::ALL {
            for repeat in 0..cfg.repeats {
                plan.push((*spec, ctrl, repeat));
            }
        }
    }
    plan
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn write_snapshots(run: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = logs::stem(&run.log);
    for (step, pair) in &run.snapshots {
        for (dof, snap) in Dof::ALL.iter().zip(pair) {
            snap.save(&dir.join(format!("{stem}__{}__s{step:05}.json", dof.name())))?;
        }
    }
    Ok(())
}

/// Writes report.csv, timing.csv and report.txt.
pub fn write_report(report: &ComparisonReport, dir: &Path) -> Result<()> {
    write(&dir.join("report.csv"), report.to_csv())?;
    write(&dir.join("timing.csv"), report.timing_csv())?;
    write(&dir.join("report.txt"), report.to_table())
}

/// Runs the whole protocol and writes every artifact under `output_dir`:
/// `config.json`, `models/`, `logs/`, `identifier_snapshots/`, the report
/// files and `plots/`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("config.json"), cfg.to_json()?)?;

    let plants = fit_plants(cfg)?;
    for (dof, model) in Dof::ALL.iter().zip(&plants.models) {
        let path = out.join("models").join(format!("{}.json", dof.name()));
        write(&path, model.to_json()?)?;
    }

    let plan = run_plan(cfg);
    let execute = |(spec, ctrl, repeat): &(TrajectorySpec, ControllerKind, usize)| run_one(cfg, &plants, spec, *ctrl, *repeat);
    let runs: Vec<RunOutput> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| plan.par_iter().map(execute).collect::<Result<Vec<_>>>())?
    } else {
        plan.iter().map(execute).collect::<Result<Vec<_>>>()?
    };

    let log_dir = out.join("logs");
    let snap_dir = out.join("identifier_snapshots");
    for run in &runs {
        logs::write_log(&run.log, &log_dir)?;
        write_snapshots(run, &snap_dir)?;
    }
    let all_logs: Vec<TrackingLog> = runs.into_iter().map(|r| r.log).collect();
    let report = ComparisonReport::from_logs(&all_logs)?;
    write_report(&report, out)?;
    emit_plots(&all_logs, &report, &out.join("plots"))?;
    Ok(report)
}

/// Rebuilds the report and plots from the logs of a finished run.
pub fn replot(dir: &Path) -> Result<ComparisonReport> {
    let mut all = logs::read_dir(&dir.join("logs"))?;
    let order = |l: &TrackingLog| {
        let traj = crate::trajectory::TrajectoryKind::ALL
            .iter()
            .position(|k| k.name() == l.trajectory)
            .unwrap_or(usize::MAX);
        let ctrl = ControllerKind::ALL
            .iter()
            .position(|c| c.name() == l.controller)
            .unwrap_or(usize::MAX);
        (traj, l.trajectory.clone(), ctrl, l.repeat)
    };
    all.sort_by_key(order);
    let report = ComparisonReport::from_logs(&all)?;
    emit_plots(&all, &report, &dir.join("plots"))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::DisturbanceConfig;
    use crate::trajectory::TrajectoryKind;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            trajectories: vec![TrajectorySpec::new(TrajectoryKind::Star).with_points(12)],
            repeats: 1,
            plant: DisturbanceConfig::disturbance_free(),
            ..Default::default()
        };
        cfg.gmm.samples_per_dof = 300;
        cfg.gmm.k = 4;
        cfg.mpc.max_solver_iters = 10;
        cfg
    }

    #[test]
    fn controller_names_parse() {
        for c in ControllerKind::ALL {
            assert_eq!(c.name().parse::<ControllerKind>().unwrap(), c);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn run_seed_depends_on_trajectory_and_repeat() {
        let a = TrajectorySpec::new(TrajectoryKind::Star);
        let b = TrajectorySpec::new(TrajectoryKind::OvalVertical);
        assert_ne!(run_seed(0, &a, 0), run_seed(0, &a, 1));
        assert_ne!(run_seed(0, &a, 0), run_seed(0, &b, 0));
        assert_ne!(run_seed(0, &a, 0), run_seed(1, &a, 0));
    }

    #[test]
    fn excitation_stays_in_limits() {
        let cfg = small();
        let samples = excitation_samples(Dof::Pitch.ground_truth(), &cfg, 5).unwrap();
        assert_eq!(samples.len(), cfg.identifier.excitation_steps);
        assert!(samples.iter().all(|s| s.1.abs() <= cfg.identifier.excitation_limit));
        assert_eq!(samples[0].0, 0.0);
    }

    #[test]
    fn run_one_fills_metadata_and_final_snapshot() {
        let cfg = small();
        let plants = fit_plants(&cfg).unwrap();
        let spec = cfg.trajectories[0];
        let run = run_one(&cfg, &plants, &spec, ControllerKind::Mppi, 0).unwrap();
        assert_eq!(run.log.len(), 12);
        assert_eq!(run.log.trajectory, "star");
        assert_eq!(run.log.controller, "mppi");
        assert_eq!(run.log.seed, run_seed(cfg.master_seed, &spec, 0));
        assert_eq!(run.snapshots.last().unwrap().0, 12);
        assert!(run.log.records.iter().all(|r| r.wall_ns > 0));
    }

    #[test]
    fn controllers_share_the_plant_realisation() {
        let mut cfg = small();
        cfg.plant = DisturbanceConfig::default();
        let plants = fit_plants(&cfg).unwrap();
        let spec = cfg.trajectories[0];
        let a = run_one(&cfg, &plants, &spec, ControllerKind::Mppi, 0).unwrap();
        let b = run_one(&cfg, &plants, &spec, ControllerKind::Mpc, 0).unwrap();
        assert_eq!(a.snapshots[0].1[0].centers, b.snapshots[0].1[0].centers);
    }
}
