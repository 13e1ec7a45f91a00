//! Classical fixed-step RK4 with optional projection back onto the
//! constraint set `{‖x_i‖ = 1, ⟨v_i, x_i⟩ = 0}`.
//!
//! Alongside the state, each step integrates the dissipation rate
//! `D = Σ (ψ_ij/N²)‖R_{x_j→x_i} v_j − v_i‖²` with the same RK4 weights, so
//! `E(t) + ∫₀ᵗ D` can be compared against `E(0)` to the scheme's accuracy.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsFrame;
use crate::dynamics::{rhs_with_dissipation, Ensemble, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_projection")]
    pub projection: bool,
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_projection() -> bool {
    true
}

fn default_stride() -> usize {
    100
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 80.0,
            projection: true,
            frame_stride: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Number of steps, after checking that `t_end` is a whole number of
    /// frame intervals so recorded frames stay uniformly spaced.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!(
                "t_end must be ≥ 0, got {}",
                self.t_end
            )));
        }
        if self.frame_stride == 0 {
            return Err(Error::Config("frame_stride must be ≥ 1".into()));
        }
        let exact = self.t_end / self.dt;
        let steps = exact.round();
        if (exact - steps).abs() > 1e-6 * exact.max(1.0) {
            return Err(Error::Config(format!(
                "t_end = {} is not a whole number of steps of dt = {}",
                self.t_end, self.dt
            )));
        }
        let steps = steps as usize;
        if !steps.is_multiple_of(self.frame_stride) {
            return Err(Error::Config(format!(
                "{steps} steps is not a multiple of frame_stride = {}",
                self.frame_stride
            )));
        }
        Ok(steps)
    }
}

/// Largest violation of the sphere and tangency constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    /// `max_i |‖x_i‖ − 1|`
    pub radial: f64,
    /// `max_i |⟨v_i, x_i⟩|`
    pub tangency: f64,
}

impl Drift {
    pub fn max(self, other: Drift) -> Drift {
        Drift {
            radial: self.radial.max(other.radial),
            tangency: self.tangency.max(other.tangency),
        }
    }
}

pub fn constraint_drift(e: &Ensemble) -> Drift {
    e.positions()
        .iter()
        .zip(e.velocities())
        .fold(Drift::default(), |d, (x, v)| Drift {
            radial: d.radial.max((x.norm() - 1.0).abs()),
            tangency: d.tangency.max(v.dot(x).abs()),
        })
}

/// One classical RK4 step, without projection.
pub fn rk4_step(e: &Ensemble, dt: f64, p: &ModelParams) -> Result<Ensemble> {
    rk4_step_with_dissipation(e, dt, p).map(|(next, _)| next)
}

/// RK4 step that also returns `∫ D dt` over the step.
fn rk4_step_with_dissipation(e: &Ensemble, dt: f64, p: &ModelParams) -> Result<(Ensemble, f64)> {
    let (k1, d1) = rhs_with_dissipation(e, p)?;
    let (k2, d2) = rhs_with_dissipation(&e.advanced(&k1, dt / 2.0), p)?;
    let (k3, d3) = rhs_with_dissipation(&e.advanced(&k2, dt / 2.0), p)?;
    let (k4, d4) = rhs_with_dissipation(&e.advanced(&k3, dt), p)?;

    let w = dt / 6.0;
    let positions = e
        .positions()
        .iter()
        .enumerate()
        .map(|(i, x)| x + w * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]))
        .collect();
    let velocities = e
        .velocities()
        .iter()
        .enumerate()
        .map(|(i, v)| v + w * (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]))
        .collect();
    let dissipated = w * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    Ok((Ensemble::from_raw(positions, velocities)?, dissipated))
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub ensemble: Ensemble,
    /// Constraint drift of the raw RK4 output, before any projection.
    pub pre_projection: Drift,
    /// `∫ D dt` over the step.
    pub dissipated: f64,
}

/// RK4 step followed, if requested, by projection onto the constraint set.
pub fn advance(e: &Ensemble, dt: f64, p: &ModelParams, projection: bool) -> Result<StepOutcome> {
    let (raw, dissipated) = rk4_step_with_dissipation(e, dt, p)?;
    let pre_projection = constraint_drift(&raw);
    let ensemble = if projection { raw.projected() } else { raw };
    Ok(StepOutcome {
        ensemble,
        pre_projection,
        dissipated,
    })
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub ensemble: Ensemble,
    pub diagnostics: DiagnosticsFrame,
}

impl Frame {
    pub fn t(&self) -> f64 {
        self.diagnostics.t
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub dt: f64,
    pub frame_stride: usize,
    pub steps_taken: usize,
    /// Largest pre-projection drift over every step taken.
    pub max_step_drift: Drift,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().map(Frame::t)
    }

    pub fn last(&self) -> &Frame {
        self.frames
            .last()
            .expect("trajectory always holds the initial frame")
    }

    /// `(t, f(frame))` pairs, e.g. for [`crate::diagnostics::fit_decay_rate`].
    pub fn series(&self, f: impl Fn(&DiagnosticsFrame) -> f64) -> Vec<(f64, f64)> {
        self.frames
            .iter()
            .map(|fr| (fr.diagnostics.t, f(&fr.diagnostics)))
            .collect()
    }
}

/// Integrates from `e0` over `[0, t_end]`, recording a frame every
/// `frame_stride` steps. On an antipodal encounter the partial trajectory is
/// returned inside [`Error::AntipodalAbort`].
pub fn simulate(e0: &Ensemble, p: &ModelParams, c: &SimConfig) -> Result<Trajectory> {
    let steps = c.steps()?;
    let initial_drift = constraint_drift(e0);
    let first = DiagnosticsFrame::compute(0.0, e0, p, initial_drift, 0.0);
    let mut traj = Trajectory {
        frames: vec![Frame {
            ensemble: e0.clone(),
            diagnostics: first,
        }],
        dt: c.dt,
        frame_stride: c.frame_stride,
        steps_taken: 0,
        max_step_drift: Drift::default(),
    };

    let mut state = e0.clone();
    let mut dissipated = 0.0;
    let mut interval_drift = Drift::default();
    for step in 1..=steps {
        let outcome = match advance(&state, c.dt, p, c.projection) {
            Ok(o) => o,
            Err(err) if err.is_antipodal() => {
                return Err(Error::AntipodalAbort {
                    time: (step - 1) as f64 * c.dt,
                    partial: Box::new(traj),
                });
            }
            Err(err) => return Err(err),
        };
        state = outcome.ensemble;
        dissipated += outcome.dissipated;
        interval_drift = interval_drift.max(outcome.pre_projection);
        traj.max_step_drift = traj.max_step_drift.max(outcome.pre_projection);
        traj.steps_taken = step;

        if step % c.frame_stride == 0 {
            let t = step as f64 * c.dt;
            let diagnostics = DiagnosticsFrame::compute(t, &state, p, interval_drift, dissipated);
            traj.frames.push(Frame {
                ensemble: state.clone(),
                diagnostics,
            });
            interval_drift = Drift::default();
        }
    }
    Ok(traj)
}
