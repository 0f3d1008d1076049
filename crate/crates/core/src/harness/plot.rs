//! SVG figures: one tracking overlay per trajectory and a timing bar chart.
//! Output is a pure function of the logs and report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::report::ComparisonReport;
use crate::tracking::TrackingLog;
use crate::{Error, Result};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

pub const REFERENCE_COLOR: &str = "red";
pub const MPC_COLOR: &str = "green";
pub const MPPI_COLOR: &str = "blue";

fn color(controller: &str) -> &'static str {
    match controller {
        "mpc" => MPC_COLOR,
        "mppi" => MPPI_COLOR,
        _ => "gray",
    }
}

/// Maps (yaw, pitch) onto the canvas with one scale for both axes.
struct Frame {
    yaw0: f64,
    pitch0: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points.filter(|p| p[0].is_finite() && p[1].is_finite()) {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if !lo[0].is_finite() {
            lo = [-1.0; 2];
            hi = [1.0; 2];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.1;
        Self {
            pitch0: 0.5 * (lo[0] + hi[0]) - 0.5 * span,
            yaw0: 0.5 * (lo[1] + hi[1]) - 0.5 * span,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn x(&self, yaw: f64) -> f64 {
        MARGIN + (yaw - self.yaw0) * self.scale
    }

    fn y(&self, pitch: f64) -> f64 {
        SIZE - MARGIN - (pitch - self.pitch0) * self.scale
    }

    fn yaw_at(&self, x: f64) -> f64 {
        self.yaw0 + (x - MARGIN) / self.scale
    }

    fn pitch_at(&self, y: f64) -> f64 {
        self.pitch0 + (SIZE - MARGIN - y) / self.scale
    }
}

fn polyline(out: &mut String, frame: &Frame, class: &str, color: &str, width: f64, points: impl Iterator<Item = [f64; 2]>) {
    let coords: Vec<String> = points
        .map(|p| format!("{:.2},{:.2}", frame.x(p[1]), frame.y(p[0])))
        .collect();
    writeln!(
        out,
        r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="0.8" points="{}"/>"#,
        coords.join(" ")
    )
    .unwrap();
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, width / 2.0).unwrap();
}

/// Reference in red, MPC runs in green, MPPI runs in blue; yaw on the
/// horizontal axis, pitch on the vertical.
pub fn trajectory_svg(trajectory: &str, logs: &[&TrackingLog]) -> String {
    let all = logs
        .iter()
        .flat_map(|l| &l.records)
        .flat_map(|r| [r.reference, r.measured]);
    let frame = Frame::fit(all);
    let mut out = String::new();
    svg_open(&mut out, SIZE, SIZE, trajectory);

    let (left, right, top, bottom) = (MARGIN, SIZE - MARGIN, MARGIN, SIZE - MARGIN);
    writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    )
    .unwrap();
    writeln!(out, r#"<text x="{left}" y="{}" text-anchor="middle">{:.1}</text>"#, bottom + 16.0, frame.yaw_at(left)).unwrap();
    writeln!(out, r#"<text x="{right}" y="{}" text-anchor="middle">{:.1}</text>"#, bottom + 16.0, frame.yaw_at(right)).unwrap();
    writeln!(out, r#"<text x="{}" y="{bottom}" text-anchor="end">{:.1}</text>"#, left - 4.0, frame.pitch_at(bottom)).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#, left - 4.0, top + 10.0, frame.pitch_at(top)).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">yaw (deg)</text>"#, SIZE / 2.0, SIZE - 12.0).unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">pitch (deg)</text>"#,
        SIZE / 2.0
    )
    .unwrap();

    for log in logs.iter().filter(|l| l.controller == "mpc") {
        polyline(&mut out, &frame, "mpc", MPC_COLOR, 1.0, log.records.iter().map(|r| r.measured));
    }
    for log in logs.iter().filter(|l| l.controller != "mpc") {
        polyline(&mut out, &frame, &log.controller, color(&log.controller), 1.0, log.records.iter().map(|r| r.measured));
    }
    if let Some(first) = logs.first() {
        polyline(&mut out, &frame, "reference", REFERENCE_COLOR, 2.0, first.records.iter().map(|r| r.reference));
    }

    for (i, (name, c)) in [("reference", REFERENCE_COLOR), ("MPC", MPC_COLOR), ("MPPI", MPPI_COLOR)]
        .iter()
        .enumerate()
    {
        let y = top + 14.0 + 16.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            left + 8.0,
            left + 28.0,
            left + 34.0,
            y + 4.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped bars of mean controller time per step, one group per trajectory.
pub fn timing_svg(report: &ComparisonReport) -> String {
    let trajectories = report.trajectories();
    let controllers = ["mpc", "mppi"];
    let width = MARGIN * 2.0 + 90.0 * trajectories.len().max(1) as f64;
    let height = 320.0;
    let plot_h = height - 2.0 * MARGIN - 20.0;
    let max_us = report
        .rows
        .iter()
        .map(|r| r.mean_step_ns / 1e3)
        .fold(0.0, f64::max)
        .max(1e-9);

    let mut out = String::new();
    svg_open(&mut out, width, height, "controller time per step (us)");
    let base = MARGIN + plot_h;
    writeln!(out, r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, width - MARGIN).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#, MARGIN - 4.0, MARGIN + 4.0, max_us).unwrap();
    writeln!(out, r#"<text x="{}" y="{base}" text-anchor="end">0</text>"#, MARGIN - 4.0).unwrap();

    for (i, traj) in trajectories.iter().enumerate() {
        let x0 = MARGIN + 90.0 * i as f64 + 15.0;
        for (j, ctrl) in controllers.iter().enumerate() {
            let Some(row) = report.row(traj, ctrl) else { continue };
            let us = row.mean_step_ns / 1e3;
            let h = plot_h * us / max_us;
            let x = x0 + 30.0 * j as f64;
            writeln!(
                out,
                r#"<rect class="{ctrl}" x="{x:.2}" y="{:.2}" width="28" height="{h:.2}" fill="{}"/>"#,
                base - h,
                color(ctrl)
            )
            .unwrap();
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9">{us:.1}</text>"#, x + 14.0, base - h - 3.0).unwrap();
        }
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{traj}</text>"#, x0 + 29.0, base + 14.0).unwrap();
    }
    writeln!(
        out,
        r#"<rect x="{0}" y="{1}" width="10" height="10" fill="{MPC_COLOR}"/><text x="{2}" y="{3}">MPC</text><rect x="{4}" y="{1}" width="10" height="10" fill="{MPPI_COLOR}"/><text x="{5}" y="{3}">MPPI</text>"#,
        MARGIN,
        height - 22.0,
        MARGIN + 14.0,
        height - 13.0,
        MARGIN + 60.0,
        MARGIN + 74.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Writes `<trajectory>.svg` for every trajectory in `report` plus
/// `timing.svg`. Writes nothing when there are no logs.
pub fn emit_plots(logs: &[TrackingLog], report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if logs.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for traj in report.trajectories() {
        let group: Vec<&TrackingLog> = logs.iter().filter(|l| l.trajectory == traj).collect();
        write(format!("{traj}.svg"), trajectory_svg(traj, &group))?;
    }
    write("timing.svg".into(), timing_svg(report))?;
    Ok(written)
}
