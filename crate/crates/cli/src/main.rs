//! `snake-mppi`: fit surrogate plants, dump references, track and compare.
//!
//! Exit status is 0 on success, 2 for config or usage errors, 3 when a run
//! fails.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use snake_mppi::gmm::{fit_em, synthesize, Dataset, EmOptions};
use snake_mppi::harness::{self, logs, rmse, ControllerKind, ExperimentConfig};
use snake_mppi::plant::Dof;
use snake_mppi::trajectory::{generate, TrajectoryKind, TrajectorySpec};
use snake_mppi::Error;

#[derive(Parser)]
#[command(name = "snake-mppi", version, about = "MPPI vs MPC tracking on a GMM-GMR snake-robot surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DofArg {
    Pitch,
    Yaw,
}

impl From<DofArg> for Dof {
    fn from(d: DofArg) -> Self {
        match d {
            DofArg::Pitch => Dof::Pitch,
            DofArg::Yaw => Dof::Yaw,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic (u_rad, x_deg) samples from a degree of freedom's ground truth.
    GenData {
        #[arg(long, value_enum, default_value = "pitch")]
        dof: DofArg,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Noise std on x, deg.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a GMM to a `u_rad,x_deg` CSV (or fresh synthetic data) and save it as JSON.
    FitGmm {
        /// Input CSV; synthetic data for `--dof` when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "pitch")]
        dof: DofArg,
        #[arg(long, default_value_t = 15)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print a reference trajectory as `j,pitch_deg,yaw_deg`.
    DumpTraj {
        #[arg(long)]
        traj: String,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Track one trajectory with one controller and write its log.
    Track {
        #[arg(long)]
        controller: String,
        #[arg(long)]
        traj: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 0)]
        repeat: usize,
        /// Overrides `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the full comparison protocol and write logs, report and plots.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Rebuild the report and plots from the logs of an earlier `compare`.
    Plot {
        #[arg(long)]
        from: PathBuf,
    },
}

/// Failure split by exit status.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        // Bad arguments are usage errors just like a bad config.
        if e.is_config_error() || matches!(e, Error::InvalidArgument(_)) {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_config(path: Option<&Path>, seed: Option<u64>, output_dir: Option<PathBuf>) -> CliResult<ExperimentConfig> {
    let mut cfg = match path {
        // A config that cannot be read is a config problem, not a run failure.
        Some(p) => ExperimentConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_traj(name: &str) -> CliResult<TrajectoryKind> {
    Ok(name.parse::<TrajectoryKind>()?)
}

fn gen_data(dof: Dof, samples: usize, noise: f64, seed: u64, output: &Path) -> CliResult<()> {
    let data = synthesize(&dof.ground_truth(), samples, noise, seed)?;
    data.write_csv(output)?;
    println!("wrote {} samples to {}", data.len(), output.display());
    Ok(())
}

fn fit_gmm(input: Option<&Path>, dof: Dof, opts: EmOptions, output: &Path) -> CliResult<()> {
    let data = match input {
        Some(p) => Dataset::read_csv(p)?,
        None => synthesize(&dof.ground_truth(), 2000, 1.0, opts.seed)?,
    };
    let fit = fit_em(&data, &opts)?;
    fit.model.save(output)?;
    println!(
        "K={} iterations={} converged={} log-likelihood={:.6}",
        fit.model.k(),
        fit.iterations,
        fit.converged,
        fit.log_likelihood.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn dump_traj(traj: &str, points: usize, output: Option<&Path>) -> CliResult<()> {
    let spec = TrajectorySpec::new(parse_traj(traj)?).with_points(points);
    spec.validate("traj").map_err(|e| Failure::Config(e.to_string()))?;
    let mut out = String::from("j,pitch_deg,yaw_deg\n");
    for (j, p) in generate(&spec)?.iter().enumerate() {
        writeln!(out, "{j},{},{}", p[0], p[1]).unwrap();
    }
    match output {
        Some(path) => fs::write(path, out).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn track(
    controller: &str,
    traj: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    points: Option<usize>,
    repeat: usize,
    output_dir: Option<PathBuf>,
) -> CliResult<()> {
    let controller: ControllerKind = controller.parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
    let kind = parse_traj(traj)?;
    let cfg = load_config(config, seed, output_dir)?;
    let mut spec = cfg
        .trajectories
        .iter()
        .find(|s| s.kind == kind)
        .copied()
        .unwrap_or_else(|| TrajectorySpec::new(kind));
    if let Some(n) = points {
        spec.points = n;
    }
    spec.validate("traj").map_err(|e| Failure::Config(e.to_string()))?;

    let plants = harness::fit_plants(&cfg)?;
    let run = harness::run_one(&cfg, &plants, &spec, controller, repeat)?;
    let path = logs::write_log(&run.log, &cfg.output_dir.join("logs"))?;
    harness::write_snapshots(&run, &cfg.output_dir.join("identifier_snapshots"))?;
    let (p, y) = rmse(&run.log)?;
    println!(
        "{} on {}: RMSE pitch {p:.3} deg, yaw {y:.3} deg, {:.1} us/step, log {}",
        controller.name(),
        kind,
        run.log.mean_step_ns() / 1e3,
        path.display()
    );
    Ok(())
}

fn compare(config: Option<&Path>, seed: Option<u64>, output_dir: Option<PathBuf>) -> CliResult<()> {
    let cfg = load_config(config, seed, output_dir)?;
    let report = harness::run_experiment(&cfg)?;
    print!("{}", report.to_table());
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn plot(from: &Path) -> CliResult<()> {
    let report = harness::replot(from)?;
    print!("{}", report.to_table());
    println!("plots in {}", from.join("plots").display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData {
            dof,
            samples,
            noise,
            seed,
            output,
        } => gen_data(dof.into(), samples, noise, seed, &output),
        Command::FitGmm {
            input,
            dof,
            k,
            seed,
            max_iter,
            tol,
            output,
        } => {
            let opts = EmOptions {
                k,
                seed,
                max_iter,
                tol,
                ..Default::default()
            };
            fit_gmm(input.as_deref(), dof.into(), opts, &output)
        }
        Command::DumpTraj { traj, points, output } => dump_traj(&traj, points, output.as_deref()),
        Command::Track {
            controller,
            traj,
            config,
            seed,
            points,
            repeat,
            output_dir,
        } => track(&controller, &traj, config.as_deref(), seed, points, repeat, output_dir),
        Command::Compare {
            config,
            seed,
            output_dir,
        } => compare(config.as_deref(), seed, output_dir),
        Command::Plot { from } => plot(&from),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
