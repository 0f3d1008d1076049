use std::fmt::Write as _;

use crate::tracking::TrackingLog;
use crate::{Error, Result};

/// Root-mean-square of reference minus measurement, `(pitch, yaw)` in deg.
pub fn rmse(log: &TrackingLog) -> Result<(f64, f64)> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut sum = [0.0; 2];
    for r in &log.records {
        for d in 0..2 {
            let e = r.reference[d] - r.measured[d];
            sum[d] += e * e;
        }
    }
    let n = log.len() as f64;
    Ok(((sum[0] / n).sqrt(), (sum[1] / n).sqrt()))
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate over the repeats of one controller on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub trajectory: String,
    pub controller: String,
    pub runs: usize,
    /// `(mean, std)` over repeats, deg
    pub rmse_pitch: (f64, f64),
    pub rmse_yaw: (f64, f64),
    /// Mean controller time per step over all steps of all repeats, ns.
    pub mean_step_ns: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    /// Groups by `(trajectory, controller)` in order of first appearance.
    pub fn from_logs(logs: &[TrackingLog]) -> Result<Self> {
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for log in logs {
            let key = (log.trajectory.as_str(), log.controller.as_str());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let mut rows = Vec::with_capacity(keys.len());
        for (trajectory, controller) in keys {
            let group: Vec<&TrackingLog> = logs
                .iter()
                .filter(|l| l.trajectory == trajectory && l.controller == controller)
                .collect();
            let errors = group.iter().map(|l| rmse(l)).collect::<Result<Vec<_>>>()?;
            let pitch: Vec<f64> = errors.iter().map(|e| e.0).collect();
            let yaw: Vec<f64> = errors.iter().map(|e| e.1).collect();
            let steps: usize = group.iter().map(|l| l.len()).sum();
            let total_ns: f64 = group.iter().flat_map(|l| &l.records).map(|r| r.wall_ns as f64).sum();
            rows.push(ReportRow {
                trajectory: trajectory.to_string(),
                controller: controller.to_string(),
                runs: group.len(),
                rmse_pitch: mean_std(&pitch),
                rmse_yaw: mean_std(&yaw),
                mean_step_ns: total_ns / steps as f64,
            });
        }
        Ok(Self { rows })
    }

    pub fn row(&self, trajectory: &str, controller: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.trajectory == trajectory && r.controller == controller)
    }

    pub fn trajectories(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.trajectory.as_str()) {
                out.push(&r.trajectory);
            }
        }
        out
    }

    /// MPC time over MPPI time on one trajectory.
    pub fn speedup(&self, trajectory: &str) -> Option<f64> {
        let mpc = self.row(trajectory, "mpc")?.mean_step_ns;
        let mppi = self.row(trajectory, "mppi")?.mean_step_ns;
        (mppi > 0.0).then(|| mpc / mppi)
    }

    /// Mean of the per-trajectory step times of one controller.
    pub fn overall_step_ns(&self, controller: &str) -> Option<f64> {
        let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.controller == controller).collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().map(|r| r.mean_step_ns).sum::<f64>() / rows.len() as f64)
    }

    /// RMSE statistics only; a pure function of the deterministic logs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# schema=1\ntrajectory,controller,runs,rmse_pitch_mean_deg,rmse_pitch_std_deg,rmse_yaw_mean_deg,rmse_yaw_std_deg\n",
        );
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.trajectory, r.controller, r.runs, r.rmse_pitch.0, r.rmse_pitch.1, r.rmse_yaw.0, r.rmse_yaw.1
            )
            .unwrap();
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("# schema=1\ntrajectory,controller,mean_step_ns,speedup_vs_mpc\n");
        for r in &self.rows {
            let speedup = self
                .row(&r.trajectory, "mpc")
                .filter(|m| r.mean_step_ns > 0.0 && m.mean_step_ns > 0.0)
                .map(|m| (m.mean_step_ns / r.mean_step_ns).to_string())
                .unwrap_or_default();
            writeln!(out, "{},{},{},{}", r.trajectory, r.controller, r.mean_step_ns, speedup).unwrap();
        }
        out
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = [
            "trajectory",
            "controller",
            "runs",
            "RMSE pitch (deg)",
            "RMSE yaw (deg)",
            "step (us)",
            "speedup",
        ];
        let mut cells: Vec<[String; 7]> = Vec::new();
        for r in &self.rows {
            let speedup = self
                .row(&r.trajectory, "mpc")
                .filter(|m| r.mean_step_ns > 0.0 && m.mean_step_ns > 0.0)
                .map(|m| format!("{:.2}x", m.mean_step_ns / r.mean_step_ns))
                .unwrap_or_else(|| "-".into());
            cells.push([
                r.trajectory.clone(),
                r.controller.clone(),
                r.runs.to_string(),
                format!("{:.3} ± {:.3}", r.rmse_pitch.0, r.rmse_pitch.1),
                format!("{:.3} ± {:.3}", r.rmse_yaw.0, r.rmse_yaw.1),
                format!("{:.1}", r.mean_step_ns / 1e3),
                speedup,
            ]);
        }
        let mut widths = header.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in row.iter().zip(widths).enumerate() {
                let pad = w - c.chars().count();
                if i > 0 {
                    s.push_str("  ");
                }
                // Text columns left-aligned, numbers right-aligned.
                if i < 2 {
                    s.push_str(c);
                    s.push_str(&" ".repeat(pad));
                } else {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(c);
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&header.map(String::from));
        out.push_str(&line(&widths.map(|w| "-".repeat(w))));
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }
}
