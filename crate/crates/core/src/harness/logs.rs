//! CSV persistence of tracking logs.
//!
//! A run is stored as two files: `<stem>.csv` holds everything that is a
//! deterministic function of the config and seed, `<stem>.timing.csv` holds
//! the per-step controller wall time. Keeping them apart lets identical runs
//! produce byte-identical logs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::tracking::{StepRecord, TrackingLog};
use crate::{Error, Result};

pub const SCHEMA: u32 = 1;

const COLUMNS: &str = "step,ref_pitch_deg,ref_yaw_deg,meas_pitch_deg,meas_yaw_deg,\
true_pitch_deg,true_yaw_deg,u_pitch_rad,u_yaw_rad,innov_pitch,innov_yaw";
const TIMING_COLUMNS: &str = "step,wall_ns";

pub fn stem(log: &TrackingLog) -> String {
    format!("{}__{}__r{}", log.trajectory, log.controller, log.repeat)
}

fn header(log: &TrackingLog) -> String {
    format!(
        "# schema={SCHEMA} controller={} trajectory={} repeat={} seed={} points={}\n",
        log.controller,
        log.trajectory,
        log.repeat,
        log.seed,
        log.records.len()
    )
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render(log: &TrackingLog) -> String {
    let mut out = header(log);
    out.push_str(COLUMNS);
    out.push('\n');
    for r in &log.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.reference[0],
            r.reference[1],
            r.measured[0],
            r.measured[1],
            r.true_state[0],
            r.true_state[1],
            r.control[0],
            r.control[1],
            opt(r.innovation[0]),
            opt(r.innovation[1]),
        )
        .unwrap();
    }
    out
}

pub fn render_timing(log: &TrackingLog) -> String {
    let mut out = header(log);
    out.push_str(TIMING_COLUMNS);
    out.push('\n');
    for r in &log.records {
        writeln!(out, "{},{}", r.step, r.wall_ns).unwrap();
    }
    out
}

/// Writes both files into `dir`; returns the path of the main log.
pub fn write_log(log: &TrackingLog, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = stem(log);
    let main = dir.join(format!("{stem}.csv"));
    let timing = dir.join(format!("{stem}.timing.csv"));
    fs::write(&main, render(log)).map_err(|e| Error::io(&main, e))?;
    fs::write(&timing, render_timing(log)).map_err(|e| Error::io(&timing, e))?;
    Ok(main)
}

struct Meta {
    controller: String,
    trajectory: String,
    repeat: usize,
    seed: u64,
}

fn parse_err(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

fn parse_header(path: &Path, line: &str) -> Result<Meta> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "missing `# schema=` header"))?;
    let mut meta = Meta {
        controller: String::new(),
        trajectory: String::new(),
        repeat: 0,
        seed: 0,
    };
    let mut schema = None;
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(path, 1, format!("bad header field `{kv}`")))?;
        let bad = |_| parse_err(path, 1, format!("bad value for `{k}`"));
        match k {
            "schema" => schema = Some(v.parse::<u32>().map_err(bad)?),
            "controller" => meta.controller = v.to_string(),
            "trajectory" => meta.trajectory = v.to_string(),
            "repeat" => meta.repeat = v.parse().map_err(bad)?,
            "seed" => meta.seed = v.parse().map_err(bad)?,
            _ => {}
        }
    }
    match schema {
        Some(SCHEMA) => Ok(meta),
        Some(s) => Err(parse_err(path, 1, format!("unsupported schema {s}"))),
        None => Err(parse_err(path, 1, "missing schema")),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a main log and, when present, its timing sibling. Without timing
/// every `wall_ns` is 0.
pub fn read_log(path: &Path) -> Result<TrackingLog> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let meta = parse_header(path, lines.next().unwrap_or(""))?;
    if lines.next() != Some(COLUMNS) {
        return Err(parse_err(path, 2, "unexpected column header"));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 3;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(parse_err(path, n, format!("expected 11 fields, got {}", fields.len())));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse::<f64>()
                .map_err(|e| parse_err(path, n, format!("column {}: {e}", j + 1)))
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if fields[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let step = fields[0]
            .parse::<usize>()
            .map_err(|e| parse_err(path, n, format!("step: {e}")))?;
        if step != records.len() {
            return Err(parse_err(path, n, format!("expected step {}, got {step}", records.len())));
        }
        records.push(StepRecord {
            step,
            reference: [num(1)?, num(2)?],
            measured: [num(3)?, num(4)?],
            true_state: [num(5)?, num(6)?],
            control: [num(7)?, num(8)?],
            innovation: [opt(9)?, opt(10)?],
            wall_ns: 0,
        });
    }

    let timing_path = timing_path(path);
    if timing_path.exists() {
        let text = read_text(&timing_path)?;
        let mut lines = text.lines().skip(1);
        if lines.next() != Some(TIMING_COLUMNS) {
            return Err(parse_err(&timing_path, 2, "unexpected column header"));
        }
        let mut count = 0;
        for (i, line) in lines.enumerate() {
            let n = i + 3;
            let (step, ns) = line
                .split_once(',')
                .ok_or_else(|| parse_err(&timing_path, n, "expected 2 fields"))?;
            let step: usize = step.parse().map_err(|e| parse_err(&timing_path, n, e))?;
            let ns: u64 = ns.parse().map_err(|e| parse_err(&timing_path, n, e))?;
            let rec = records
                .get_mut(step)
                .ok_or_else(|| parse_err(&timing_path, n, format!("step {step} not in log")))?;
            rec.wall_ns = ns;
            count += 1;
        }
        if count != records.len() {
            return Err(parse_err(&timing_path, count + 2, "timing rows do not match the log"));
        }
    }

    Ok(TrackingLog {
        controller: meta.controller,
        trajectory: meta.trajectory,
        repeat: meta.repeat,
        seed: meta.seed,
        records,
    })
}

pub fn timing_path(log_path: &Path) -> PathBuf {
    let stem = log_path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    log_path.with_file_name(format!("{stem}.timing.csv"))
}

/// All main logs in `dir`, in file-name order.
pub fn read_dir(dir: &Path) -> Result<Vec<TrackingLog>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && !name.ends_with(".timing.csv")
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| read_log(p)).collect()
}
