//! Energy, diameters, flocking metrics and decay-rate fits.

use serde::{Deserialize, Serialize};

use crate::dynamics::{pair_functional, rhs, Ensemble, ModelParams};
use crate::error::{Error, Result};
use crate::geometry::{rotation_raw, ANTIPODAL_TOLERANCE};
use crate::integrator::{Drift, Trajectory};
use crate::kernel::Kernel;

/// `E = E_K + E_C` with `E_K = (1/N) Σ ‖v_k‖²` and
/// `E_C = (σ/2N²) Σ_{k,l} ‖x_k − x_l‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub total: f64,
    pub kinetic: f64,
    pub config: f64,
}

pub fn energy(e: &Ensemble, sigma: f64) -> Energy {
    let n = e.n() as f64;
    let kinetic = e.velocities().iter().map(|v| v.norm_squared()).sum::<f64>() / n;
    let mut pairs = 0.0;
    for xk in e.positions() {
        for xl in e.positions() {
            pairs += (xk - xl).norm_squared();
        }
    }
    let config = sigma / (2.0 * n * n) * pairs;
    Energy {
        total: kinetic + config,
        kinetic,
        config,
    }
}

/// `Σ_{i,j} (ψ_ij/N²) ‖R_{x_j→x_i} v_j − v_i‖²`, together with the number
/// of ordered pairs skipped for sitting inside the antipodal tolerance.
pub fn dissipation_rate(e: &Ensemble, kernel: &Kernel) -> (f64, usize) {
    let n = e.n() as f64;
    let mut total = 0.0;
    let mut skipped = 0;
    for (xi, vi) in e.positions().iter().zip(e.velocities()) {
        for (xj, vj) in e.positions().iter().zip(e.velocities()) {
            match rotation_raw(xj, xi) {
                Ok(r) => total += kernel.rate((xi - xj).norm()) * (r * vj - vi).norm_squared(),
                Err(_) => skipped += 1,
            }
        }
    }
    (total / (n * n), skipped)
}

/// `dE/dt` by the chain rule through [`rhs`]:
/// `(2/N) Σ ⟨v_i, v̇_i⟩ + (σ/N²) Σ_{k,l} ⟨x_k − x_l, v_k − v_l⟩`.
pub fn energy_rate(e: &Ensemble, p: &ModelParams) -> Result<f64> {
    let d = rhs(e, p)?;
    let n = e.n() as f64;
    let kinetic: f64 = e
        .velocities()
        .iter()
        .zip(&d.dv)
        .map(|(v, a)| v.dot(a))
        .sum::<f64>()
        * 2.0
        / n;
    let mut config = 0.0;
    for (xk, vk) in e.positions().iter().zip(e.velocities()) {
        for (xl, vl) in e.positions().iter().zip(e.velocities()) {
            config += (xk - xl).dot(&(vk - vl));
        }
    }
    Ok(kinetic + p.sigma / (n * n) * config)
}

/// Central difference of `E` along the flow direction, `(E(e + h ė) − E(e − h ė)) / 2h`.
/// Secondary oracle for [`energy_rate`]; agrees to `O(h²)`.
pub fn energy_rate_fd(e: &Ensemble, p: &ModelParams, h: f64) -> Result<f64> {
    let d = rhs(e, p)?;
    let plus = energy(&e.advanced(&d, h), p.sigma).total;
    let minus = energy(&e.advanced(&d, -h), p.sigma).total;
    Ok((plus - minus) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationResidual {
    /// Analytic `dE/dt`.
    pub energy_rate: f64,
    pub dissipation: f64,
    /// `|dE/dt + dissipation|`.
    pub residual: f64,
}

impl DissipationResidual {
    /// The identity check `residual ≤ tol · max(1, |dE/dt|)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol * self.energy_rate.abs().max(1.0)
    }
}

pub fn dissipation_residual(e: &Ensemble, p: &ModelParams) -> Result<DissipationResidual> {
    let energy_rate = energy_rate(e, p)?;
    let (dissipation, skipped) = dissipation_rate(e, &p.kernel);
    if skipped > 0 {
        // rhs already succeeded, so this is unreachable in practice.
        return Err(Error::AntipodalPair { margin: 0.0 });
    }
    Ok(DissipationResidual {
        energy_rate,
        dissipation,
        residual: (energy_rate + dissipation).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diameters {
    /// `max_{i,j} ‖x_i − x_j‖`
    pub d_x: f64,
    /// `max_{i,j} ‖v_i − v_j‖`
    pub d_v: f64,
    /// `max_i ‖v_i‖`
    pub v_max: f64,
}

pub fn diameters(e: &Ensemble) -> Diameters {
    let mut d_x: f64 = 0.0;
    let mut d_v: f64 = 0.0;
    for i in 0..e.n() {
        for j in i + 1..e.n() {
            d_x = d_x.max((e.position(i) - e.position(j)).norm());
            d_v = d_v.max((e.velocity(i) - e.velocity(j)).norm());
        }
    }
    let v_max = e.velocities().iter().map(|v| v.norm()).fold(0.0, f64::max);
    Diameters { d_x, d_v, v_max }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlockingMetrics {
    /// `max_{i,j} ‖x_i + x_j‖ · ‖R_{x_j→x_i} v_j − v_i‖`
    pub flock_align: f64,
    /// `min_{i,j} ‖x_i + x_j‖`
    pub antipode_margin: f64,
    /// Ordered pairs inside the antipodal tolerance, counted as zero alignment.
    pub degenerate_pairs: usize,
}

pub fn flocking_metrics(e: &Ensemble) -> FlockingMetrics {
    let mut flock_align: f64 = 0.0;
    let mut antipode_margin: f64 = 2.0;
    let mut degenerate_pairs = 0;
    for (xi, vi) in e.positions().iter().zip(e.velocities()) {
        for (xj, vj) in e.positions().iter().zip(e.velocities()) {
            let margin = (xi + xj).norm();
            antipode_margin = antipode_margin.min(margin);
            if margin <= ANTIPODAL_TOLERANCE {
                degenerate_pairs += 1;
                continue;
            }
            if let Ok(r) = rotation_raw(xj, xi) {
                flock_align = flock_align.max(margin * (r * vj - vi).norm());
            }
        }
    }
    FlockingMetrics {
        flock_align,
        antipode_margin: antipode_margin.clamp(0.0, 2.0),
        degenerate_pairs,
    }
}

/// `max_{i,j} ‖X^{ij}‖`.
pub fn max_pair_functional(e: &Ensemble) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..e.n() {
        for j in i + 1..e.n() {
            best = best.max(pair_functional(e, i, j).norm());
        }
    }
    best
}

/// Everything recorded about the state at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsFrame {
    pub t: f64,
    pub e_total: f64,
    pub e_kinetic: f64,
    pub e_config: f64,
    pub d_x: f64,
    pub d_v: f64,
    pub v_max: f64,
    pub flock_align: f64,
    pub antipode_margin: f64,
    /// Largest pre-projection drift over the steps since the previous frame.
    pub drift: Drift,
    pub x_max: f64,
    /// Instantaneous dissipation rate.
    pub dissipation: f64,
    /// `∫₀ᵗ dissipation`, integrated alongside the state.
    pub dissipated: f64,
}

impl DiagnosticsFrame {
    pub fn compute(t: f64, e: &Ensemble, p: &ModelParams, drift: Drift, dissipated: f64) -> Self {
        let en = energy(e, p.sigma);
        let dm = diameters(e);
        let fm = flocking_metrics(e);
        let (dissipation, _) = dissipation_rate(e, &p.kernel);
        Self {
            t,
            e_total: en.total,
            e_kinetic: en.kinetic,
            e_config: en.config,
            d_x: dm.d_x,
            d_v: dm.d_v,
            v_max: dm.v_max,
            flock_align: fm.flock_align,
            antipode_margin: fm.antipode_margin,
            drift,
            x_max: max_pair_functional(e),
            dissipation,
            dissipated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityBoundCheck {
    pub psi_m: f64,
    /// `max_t 𝒱²(t) − bound(t)`; nonpositive when the bound holds.
    pub worst_violation: f64,
    /// `ψ_ij ≥ ψ_m` failed somewhere along the trajectory, so the bound says nothing.
    pub vacuous: bool,
}

/// Default lower rate along a trajectory: `ψ(max_t D_x(t))`.
pub fn trajectory_psi_m(traj: &Trajectory, kernel: &Kernel) -> f64 {
    let d_max = traj
        .frames
        .iter()
        .map(|f| f.diagnostics.d_x)
        .fold(0.0, f64::max);
    kernel.rate(d_max)
}

/// Compares `𝒱²(t)` against
/// `e^{−ψ_m t/2} 𝒱²(0) + (1 − e^{−ψ_m t/2}) (2 sup E_K + (4σ²/ψ_m²) sup D_x²)`,
/// with running suprema over recorded frames.
pub fn velocity_bound_check(
    traj: &Trajectory,
    kernel: &Kernel,
    sigma: f64,
    psi_m: f64,
) -> VelocityBoundCheck {
    let vacuous = !(psi_m > 0.0)
        || traj
            .frames
            .iter()
            .any(|f| kernel.rate(f.diagnostics.d_x) < psi_m);
    let v0_sq = traj.frames[0].diagnostics.v_max.powi(2);
    let mut sup_ek: f64 = 0.0;
    let mut sup_dx_sq: f64 = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for f in &traj.frames {
        let d = &f.diagnostics;
        sup_ek = sup_ek.max(d.e_kinetic);
        sup_dx_sq = sup_dx_sq.max(d.d_x * d.d_x);
        let decay = (-psi_m * d.t / 2.0).exp();
        let bound = decay * v0_sq
            + (1.0 - decay) * (2.0 * sup_ek + 4.0 * sigma * sigma / (psi_m * psi_m) * sup_dx_sq);
        worst = worst.max(d.v_max * d.v_max - bound);
    }
    VelocityBoundCheck {
        psi_m,
        worst_violation: worst,
        vacuous,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Negated least-squares slope of `ln(value)` against `t`.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// The series was constant in the window, so `r²` is undefined and reported as 0.
    pub degenerate: bool,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Semi-log least-squares fit over samples with `t ∈ [window.0, window.1]`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            found: points.len(),
        });
    }
    if let Some(&(t, value)) = points.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::NonPositiveValue { t, value });
    }

    let m = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &points {
        let dt = t - mean_t;
        let dy = v.ln() - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let degenerate = syy == 0.0;
    let r_squared = if degenerate {
        0.0
    } else {
        sty * sty / (stt * syy)
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        samples: points.len(),
        degenerate,
    })
}
