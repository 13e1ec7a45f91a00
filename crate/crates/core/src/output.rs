//! Frame CSV, full-state CSV and the JSON run summary.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::admissibility::{AdmissibilityReport, Thresholds};
use crate::diagnostics::{fit_decay_rate, DecayFit, DiagnosticsFrame};
use crate::error::{Error, Result};
use crate::integrator::{Drift, Trajectory};
use crate::scenario::Adjustment;

pub const CSV_HEADER: [&str; 12] = [
    "t",
    "E",
    "E_K",
    "E_C",
    "D_x",
    "D_v",
    "V_max",
    "flock_align",
    "antipode_margin",
    "drift_radial",
    "drift_tangency",
    "X_max",
];

pub const FULL_STATE_HEADER: [&str; 8] = ["t", "agent", "x", "y", "z", "vx", "vy", "vz"];

/// 17 significant digits; parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn frame_row(f: &DiagnosticsFrame) -> [f64; 12] {
    [
        f.t,
        f.e_total,
        f.e_kinetic,
        f.e_config,
        f.d_x,
        f.d_v,
        f.v_max,
        f.flock_align,
        f.antipode_margin,
        f.drift.radial,
        f.drift.tangency,
        f.x_max,
    ]
}

pub fn write_frames_csv<W: Write>(mut w: W, frames: &[DiagnosticsFrame]) -> Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for f in frames {
        let row: Vec<String> = frame_row(f).iter().map(|&v| format_value(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_full_state_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "{}", FULL_STATE_HEADER.join(","))?;
    for frame in &traj.frames {
        let e = &frame.ensemble;
        for (k, (x, v)) in e.positions().iter().zip(e.velocities()).enumerate() {
            let t = format_value(frame.t());
            let vals: Vec<String> = x.iter().chain(v.iter()).map(|&c| format_value(c)).collect();
            writeln!(w, "{t},{k},{}", vals.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A frames CSV read back as named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FrameTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("CSV has no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// `(t, column)` pairs.
    pub fn series(&self, name: &str) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .column("t")?
            .into_iter()
            .zip(self.column(name)?)
            .collect())
    }
}

pub fn read_frames_csv<R: BufRead>(r: R) -> Result<FrameTable> {
    let mut lines = r.lines();
    let header: Vec<String> = match lines.next() {
        Some(line) => line?.trim().split(',').map(str::to_string).collect(),
        None => return Err(Error::Config("empty CSV".into())),
    };
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected CSV header {:?}",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .trim()
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Config(format!("CSV line {}: {e}", lineno + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "CSV line {} has {} fields, expected {}",
                lineno + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(FrameTable { header, rows })
}

/// Default fit window `[t_end/8, t_end]`.
pub fn default_fit_window(t_end: f64) -> (f64, f64) {
    (t_end / 8.0, t_end)
}

/// Fits the decay rate of `D_x` exactly as `fit-rate` does on the CSV, by
/// round-tripping the values through their printed form.
pub fn fit_frames(frames: &[DiagnosticsFrame], window: (f64, f64)) -> Result<DecayFit> {
    let series: Vec<(f64, f64)> = frames
        .iter()
        .map(|f| (reparse(f.t), reparse(f.d_x)))
        .collect();
    fit_decay_rate(&series, window)
}

fn reparse(v: f64) -> f64 {
    format_value(v).parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub steps: usize,
    pub wall_seconds: f64,
    pub dt: f64,
    pub t_end: f64,
    pub frame_stride: usize,
    pub projection: bool,
    pub threads: usize,
    pub max_step_drift: Drift,
    pub initial_adjustment: Adjustment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub window: (f64, f64),
    pub rate: Option<f64>,
    pub r_squared: Option<f64>,
    pub samples: Option<usize>,
    pub degenerate: Option<bool>,
    pub error: Option<String>,
}

impl FitSummary {
    pub fn from_result(window: (f64, f64), fit: Result<DecayFit>) -> Self {
        match fit {
            Ok(f) => Self {
                window,
                rate: Some(f.rate),
                r_squared: Some(f.r_squared),
                samples: Some(f.samples),
                degenerate: Some(f.degenerate),
                error: None,
            },
            Err(e) => Self {
                window,
                rate: None,
                r_squared: None,
                samples: None,
                degenerate: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub n_agents: usize,
    pub sigma: f64,
    pub kernel: String,
    /// Absent when the kernel admits no thresholds (e.g. `ψ(0) = 0`).
    pub thresholds: Option<Thresholds>,
    pub admissibility: Option<AdmissibilityReport>,
    pub delta: Option<f64>,
    pub final_frame: DiagnosticsFrame,
    pub fit: FitSummary,
    /// Set when the run stopped at an antipodal configuration.
    pub aborted_at: Option<f64>,
    pub runtime: RuntimeStats,
}

impl RunSummary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Ensemble, ModelParams};
    use crate::integrator::{simulate, SimConfig};
    use crate::kernel::paper_kernel;
    use crate::Vec3;

    fn short_run() -> Trajectory {
        let e = Ensemble::new(
            vec![Vec3::x(), Vec3::new(0.8, 0.6, 0.0)],
            vec![Vec3::new(0.0, 0.3, 0.1), Vec3::new(0.0, 0.0, -0.2)],
        )
        .unwrap();
        let p = ModelParams::new(paper_kernel(), 1.0).unwrap();
        let c = SimConfig {
            dt: 0.01,
            t_end: 2.0,
            projection: true,
            frame_stride: 5,
            seed: 0,
        };
        simulate(&e, &p, &c).unwrap()
    }

    #[test]
    fn values_round_trip_exactly() {
        for v in [
            0.1,
            1.0 / 3.0,
            std::f64::consts::PI,
            5e-324,
            1.7976931348623157e308,
            -2.5e-17,
            0.0,
        ] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_has_exact_header_and_round_trips() {
        let traj = short_run();
        let frames: Vec<DiagnosticsFrame> = traj.frames.iter().map(|f| f.diagnostics).collect();
        let mut buf = Vec::new();
        write_frames_csv(&mut buf, &frames).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "t,E,E_K,E_C,D_x,D_v,V_max,flock_align,antipode_margin,drift_radial,drift_tangency,X_max\n"
        ));
        let table = read_frames_csv(text.as_bytes()).unwrap();
        assert_eq!(table.rows.len(), frames.len());
        for (row, f) in table.rows.iter().zip(&frames) {
            assert_eq!(row.as_slice(), frame_row(f).as_slice());
        }
    }

    #[test]
    fn fit_from_csv_matches_in_memory_fit() {
        let traj = short_run();
        let frames: Vec<DiagnosticsFrame> = traj.frames.iter().map(|f| f.diagnostics).collect();
        let mut buf = Vec::new();
        write_frames_csv(&mut buf, &frames).unwrap();
        let table = read_frames_csv(buf.as_slice()).unwrap();
        let window = default_fit_window(2.0);
        let a = fit_frames(&frames, window).unwrap();
        let b = fit_decay_rate(&table.series("D_x").unwrap(), window).unwrap();
        assert_eq!(a.rate.to_bits(), b.rate.to_bits());
        assert_eq!(a.r_squared.to_bits(), b.r_squared.to_bits());
    }

    #[test]
    fn full_state_has_one_row_per_agent_per_frame() {
        let traj = short_run();
        let mut buf = Vec::new();
        write_full_state_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * traj.frames.len());
        assert!(text.starts_with("t,agent,x,y,z,vx,vy,vz\n"));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_frames_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_frames_csv("".as_bytes()).is_err());
    }
}
