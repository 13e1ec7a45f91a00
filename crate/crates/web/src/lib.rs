//! Browser bindings for the sphereflock demo page.
//!
//! Every export returns a JSON string; errors come back as a thrown string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sphereflock::admissibility::{check_initial, thresholds, AdmissibilityReport, Thresholds};
use sphereflock::diagnostics::{fit_decay_rate, DecayFit};
use sphereflock::dynamics::ModelParams;
use sphereflock::integrator::{simulate, SimConfig};
use sphereflock::kernel::{paper_kernel, KernelSpec};
use sphereflock::scenario::{paper_scenario, random_scenario};
use sphereflock::Error;

#[derive(Serialize)]
struct Run {
    sigma: f64,
    times: Vec<f64>,
    d_x: Vec<f64>,
    energy: Vec<f64>,
    /// `positions[frame][agent] = [x, y, z]`
    positions: Vec<Vec<[f64; 3]>>,
    delta: f64,
    fit: Option<DecayFit>,
    admissible: bool,
    aborted_at: Option<f64>,
}

#[derive(Serialize)]
struct RandomCheck {
    seed: u64,
    positions: Vec<[f64; 3]>,
    report: AdmissibilityReport,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn err(e: Error) -> String {
    e.to_string()
}

pub fn run_paper(sigma: f64, t_end: f64, dt: f64, frame_stride: usize) -> Result<String, String> {
    let s = paper_scenario(sigma).map_err(err)?;
    let cfg = SimConfig {
        dt,
        t_end,
        frame_stride,
        ..SimConfig::default()
    };
    let (traj, aborted_at) = match simulate(&s.ensemble, &s.params, &cfg) {
        Ok(t) => (t, None),
        Err(Error::AntipodalAbort { time, partial }) => (*partial, Some(time)),
        Err(e) => return Err(err(e)),
    };
    let th = thresholds(&s.params.kernel, sigma).map_err(err)?;
    let report = check_initial(&s.ensemble, &s.params).map_err(err)?;
    let run = Run {
        sigma,
        times: traj.times().collect(),
        d_x: traj.frames.iter().map(|f| f.diagnostics.d_x).collect(),
        energy: traj.frames.iter().map(|f| f.diagnostics.e_total).collect(),
        positions: traj
            .frames
            .iter()
            .map(|f| {
                f.ensemble
                    .positions()
                    .iter()
                    .map(|x| [x.x, x.y, x.z])
                    .collect()
            })
            .collect(),
        delta: th.delta,
        fit: fit_decay_rate(&traj.series(|f| f.d_x), (t_end / 8.0, t_end)).ok(),
        admissible: report.admissible,
        aborted_at,
    };
    to_json(&run)
}

pub fn kernel_thresholds(kernel: &str, parameter: f64, sigma: f64) -> Result<String, String> {
    let spec = match kernel {
        "exponential" => KernelSpec::Exponential {
            amplitude: parameter,
        },
        "linear" => KernelSpec::Linear { slope: parameter },
        "quadratic" => KernelSpec::Quadratic { scale: parameter },
        other => return Err(format!("unknown kernel {other:?}")),
    };
    let k = spec.build().map_err(err)?;
    let th: Thresholds = thresholds(&k, sigma).map_err(err)?;
    to_json(&th)
}

pub fn random_admissibility(
    seed: u64,
    n: usize,
    pos_spread: f64,
    vel_scale: f64,
    sigma: f64,
) -> Result<String, String> {
    let p = ModelParams::new(paper_kernel(), sigma).map_err(err)?;
    let s = random_scenario(seed, n, pos_spread, vel_scale, p).map_err(err)?;
    let report = check_initial(&s.ensemble, &s.params).map_err(err)?;
    to_json(&RandomCheck {
        seed,
        positions: s
            .ensemble
            .positions()
            .iter()
            .map(|x| [x.x, x.y, x.z])
            .collect(),
        report,
    })
}

/// Integrates the six-agent reference configuration.
#[wasm_bindgen(js_name = simulatePaper)]
pub fn simulate_paper_js(
    sigma: f64,
    t_end: f64,
    dt: f64,
    frame_stride: usize,
) -> Result<String, JsValue> {
    run_paper(sigma, t_end, dt, frame_stride).map_err(|e| JsValue::from_str(&e))
}

/// Decay constants for a builtin kernel (`exponential`, `linear`, `quadratic`).
#[wasm_bindgen(js_name = thresholds)]
pub fn thresholds_js(kernel: &str, parameter: f64, sigma: f64) -> Result<String, JsValue> {
    kernel_thresholds(kernel, parameter, sigma).map_err(|e| JsValue::from_str(&e))
}

/// Admissibility of a seeded random cluster under the reference kernel.
#[wasm_bindgen(js_name = checkRandom)]
pub fn check_random_js(
    seed: u32,
    n: usize,
    pos_spread: f64,
    vel_scale: f64,
    sigma: f64,
) -> Result<String, JsValue> {
    random_admissibility(u64::from(seed), n, pos_spread, vel_scale, sigma)
        .map_err(|e| JsValue::from_str(&e))
}
