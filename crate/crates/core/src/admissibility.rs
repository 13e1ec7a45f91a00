//! Decay constants and the sufficient condition on initial data for
//! exponential rendezvous.
//!
//! With `μ` the spectral abscissa of `A` and `C` an aggregation constant
//! bounding the inhomogeneous term,
//!
//! ```text
//!   ‖F^{ij}‖ ≤ C (𝒱 + 𝒱²)/4 (D_x² + D_v²) + (σ/2) D_x⁴,
//! ```
//!
//! initial data with `𝒱(0) < 𝒱₀`, `E(0) < E₀` and `X(0) < min(μ/2σ, X_M)`
//! rendezvous at rate `δ = μ/2`.
//!
//! `C` is obtained by adding the two component bounds
//!
//! ```text
//!   |F₂| ≤ (𝒱 + 6‖ψ‖_{C¹}) 𝒱 D_x² + ψ₀ 𝒱 D_x³ + (σ/2) D_x⁴
//!   |F₃| ≤ (3𝒱 + 6‖ψ‖_{C¹} + 2σ) 𝒱 D_x² + (3𝒱 + 7‖ψ‖_{C¹}) 𝒱 D_v² + ψ₀ 𝒱 D_x⁴
//! ```
//!
//! and using `D_x ≤ 2` (so `D_x³ ≤ 2D_x²`, `D_x⁴ ≤ 4D_x²` in the ψ₀ terms):
//! the `𝒱²` coefficients are at most 4 and the `𝒱` coefficients at most
//! `12‖ψ‖_{C¹} + 2σ + 6ψ₀`. Since `𝒱, 𝒱² ≤ 𝒱 + 𝒱²`, any
//! `C ≥ max(16, 48‖ψ‖_{C¹} + 8σ + 24ψ₀)` works, and that is the value used.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{diameters, energy, max_pair_functional};
use crate::dynamics::{inhomogeneous_term, spectral_abscissa, Ensemble, ModelParams};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, MAX_DISTANCE};

const BISECTION_MAX_ITERS: usize = 400;

/// `C(ψ, σ) = max(16, 48‖ψ‖_{C¹} + 8σ + 24ψ₀)`.
pub fn aggregate_constant(k: &Kernel, sigma: f64) -> f64 {
    (48.0 * k.c1_norm() + 8.0 * sigma + 24.0 * k.psi0()).max(16.0)
}

/// Whether `μ/4C < 1`, which selects the first case of every threshold.
pub fn small_ratio_branch(mu: f64, c: f64) -> bool {
    mu / (4.0 * c) < 1.0
}

/// The coefficient `κ` in the fixed-point equation `√X = κ ψ(√X)`.
pub fn x_m_coefficient(mu: f64, c: f64, sigma: f64) -> f64 {
    if small_ratio_branch(mu, c) {
        mu / (128f64.sqrt() * c * sigma)
    } else {
        mu.sqrt() / ((32.0 * c).sqrt() * sigma)
    }
}

/// `√X − κ ψ(√X)`; negative below `X_M` and positive above it.
pub fn x_m_equation(k: &Kernel, coefficient: f64, x: f64) -> f64 {
    let s = x.max(0.0).sqrt();
    s - coefficient * k.rate(s)
}

/// Root of `√X = κ ψ(√X)` on `(0, 4)` by bisection in `s = √X`.
///
/// `s` increases from 0 while `κ ψ(s)` decreases to 0 at `s = 2`, so the
/// crossing is unique whenever `κ ψ(0) > 0`.
pub fn solve_x_m(k: &Kernel, sigma: f64, mu: f64, c: f64) -> Result<f64> {
    let coefficient = x_m_coefficient(mu, c, sigma);
    solve_fixed_point(k, coefficient)
}

pub fn solve_fixed_point(k: &Kernel, coefficient: f64) -> Result<f64> {
    let g = |s: f64| s - coefficient * k.rate(s);
    if !(coefficient.is_finite() && coefficient > 0.0) {
        return Err(Error::NoRoot(format!(
            "coefficient {coefficient} is not positive and finite"
        )));
    }
    let (mut lo, mut hi) = (0.0, MAX_DISTANCE);
    if !(g(lo) < 0.0) {
        return Err(Error::NoRoot(format!(
            "ψ(0) = {} leaves no crossing",
            k.psi0()
        )));
    }
    if !(g(hi) > 0.0) {
        return Err(Error::NoRoot(
            "ψ(2) > 0 leaves no crossing on [0, 2]".into(),
        ));
    }
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(s * s)
}

/// Number of sign changes of [`x_m_equation`] on the uniform grid
/// `X_k = 4k/points`, `k = 0..=points`.
pub fn x_m_sign_changes(k: &Kernel, coefficient: f64, points: usize) -> usize {
    let values: Vec<f64> = (0..=points)
        .map(|i| x_m_equation(k, coefficient, 4.0 * i as f64 / points as f64))
        .collect();
    values
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub mu: f64,
    pub c_const: f64,
    pub v0: f64,
    pub e0: f64,
    pub x_m: f64,
    pub psi_m: f64,
    pub delta: f64,
    /// `μ/4C < 1`.
    pub small_ratio_branch: bool,
    /// `|√X_M − κ ψ(√X_M)|`.
    pub x_m_residual: f64,
}

pub fn thresholds(k: &Kernel, sigma: f64) -> Result<Thresholds> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!("thresholds need σ > 0, got {sigma}")));
    }
    if !(k.psi0() > 0.0) {
        return Err(Error::NoRoot(format!(
            "ψ(0) = {} must be positive",
            k.psi0()
        )));
    }
    let mu = spectral_abscissa(k.psi0(), sigma);
    let c = aggregate_constant(k, sigma);
    let ratio = mu / (4.0 * c);
    let small = small_ratio_branch(mu, c);
    let (v0, e0) = if small {
        (ratio, mu * mu / (64.0 * c * c))
    } else {
        (ratio.sqrt(), mu / (16.0 * c))
    };
    let coefficient = x_m_coefficient(mu, c, sigma);
    let x_m = solve_fixed_point(k, coefficient)?;
    Ok(Thresholds {
        mu,
        c_const: c,
        v0,
        e0,
        x_m,
        psi_m: k.rate(x_m.sqrt()),
        delta: mu / 2.0,
        small_ratio_branch: small,
        x_m_residual: x_m_equation(k, coefficient, x_m).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// `𝒱(0) < 𝒱₀`
    pub velocity: bool,
    /// `E(0) < E₀`
    pub energy: bool,
    /// `X(0) < min(μ/2σ, X_M)`
    pub pair_functional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub thresholds: Thresholds,
    pub v_initial: f64,
    pub e_initial: f64,
    pub x_initial: f64,
    /// `min(μ/2σ, X_M)`
    pub bound_x: f64,
    pub mu_over_two_sigma: f64,
    pub verdicts: Verdicts,
    pub admissible: bool,
    /// Left side over right side for each clause; admissible needs all `< 1`.
    pub margins: Margins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub velocity: f64,
    pub energy: f64,
    pub pair_functional: f64,
}

/// Evaluates the three strict inequalities with zero slack.
pub fn check_initial(e0: &Ensemble, p: &ModelParams) -> Result<AdmissibilityReport> {
    let th = thresholds(&p.kernel, p.sigma)?;
    let v_initial = diameters(e0).v_max;
    let e_initial = energy(e0, p.sigma).total;
    let x_initial = max_pair_functional(e0);
    let mu_over_two_sigma = th.mu / (2.0 * p.sigma);
    let bound_x = mu_over_two_sigma.min(th.x_m);
    let verdicts = Verdicts {
        velocity: v_initial < th.v0,
        energy: e_initial < th.e0,
        pair_functional: x_initial < bound_x,
    };
    Ok(AdmissibilityReport {
        thresholds: th,
        v_initial,
        e_initial,
        x_initial,
        bound_x,
        mu_over_two_sigma,
        verdicts,
        admissible: verdicts.velocity && verdicts.energy && verdicts.pair_functional,
        margins: Margins {
            velocity: v_initial / th.v0,
            energy: e_initial / th.e0,
            pair_functional: x_initial / bound_x,
        },
    })
}

/// The component bounds on `F^{ij}` and their aggregate, evaluated with the
/// ensemble-wide `𝒱`, `D_x`, `D_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousBounds {
    pub f2_bound: f64,
    pub f3_bound: f64,
    /// `C (𝒱 + 𝒱²)/4 (D_x² + D_v²) + (σ/2) D_x⁴`
    pub aggregate: f64,
}

pub fn inhomogeneous_bounds(e: &Ensemble, p: &ModelParams, c: f64) -> InhomogeneousBounds {
    let d = diameters(e);
    let (v, dx, dv) = (d.v_max, d.d_x, d.d_v);
    let c1 = p.kernel.c1_norm();
    let psi0 = p.kernel.psi0();
    let sigma = p.sigma;
    let (dx2, dv2) = (dx * dx, dv * dv);
    InhomogeneousBounds {
        f2_bound: (v + 6.0 * c1) * v * dx2 + psi0 * v * dx2 * dx + sigma / 2.0 * dx2 * dx2,
        f3_bound: (3.0 * v + 6.0 * c1 + 2.0 * sigma) * v * dx2
            + (3.0 * v + 7.0 * c1) * v * dv2
            + psi0 * v * dx2 * dx2,
        aggregate: c * (v + v * v) / 4.0 * (dx2 + dv2) + sigma / 2.0 * dx2 * dx2,
    }
}

/// Pairs `(i, j)` whose `|F₂|`, `|F₃|` or `‖F‖` exceed the bounds, each with
/// the largest ratio of value to bound seen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundViolations {
    pub pairs_checked: usize,
    pub f2: usize,
    pub f3: usize,
    pub aggregate: usize,
    pub worst_ratio: f64,
}

pub fn check_inhomogeneous_bounds(e: &Ensemble, p: &ModelParams) -> Result<BoundViolations> {
    let c = aggregate_constant(&p.kernel, p.sigma);
    let b = inhomogeneous_bounds(e, p, c);
    let mut out = BoundViolations::default();
    let ratio = |value: f64, bound: f64| {
        if bound > 0.0 {
            value / bound
        } else if value > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    for i in 0..e.n() {
        for j in (i + 1)..e.n() {
            let f = inhomogeneous_term(e, i, j, p)?;
            out.pairs_checked += 1;
            out.f2 += usize::from(f.f2.abs() > b.f2_bound);
            out.f3 += usize::from(f.f3.abs() > b.f3_bound);
            out.aggregate += usize::from(f.norm() > b.aggregate);
            out.worst_ratio = out
                .worst_ratio
                .max(ratio(f.f2.abs(), b.f2_bound))
                .max(ratio(f.f3.abs(), b.f3_bound))
                .max(ratio(f.norm(), b.aggregate));
        }
    }
    Ok(out)
}

impl BoundViolations {
    pub fn total(&self) -> usize {
        self.f2 + self.f3 + self.aggregate
    }
}
