//! Invariant suite run by `sphereflock verify`.
//!
//! Each suite counts individual checks and failures; the first few failures
//! are kept as text for the report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admissibility::{
    aggregate_constant, check_inhomogeneous_bounds, thresholds, x_m_coefficient, x_m_sign_changes,
};
use crate::diagnostics::{dissipation_residual, trajectory_psi_m, velocity_bound_check};
use crate::dynamics::{
    coefficient_matrix, inhomogeneous_term, pair_functional, pair_functional_rate, rhs,
    spectral_abscissa, Ensemble, ModelParams,
};
use crate::error::Result;
use crate::geometry::rotation_raw;
use crate::integrator::{advance, simulate, SimConfig};
use crate::kernel::{paper_kernel, validate_kernel, Kernel, KernelSpec};
use crate::scenario::{paper_scenario, sample_ensemble};
use crate::Vec3;

const MAX_NOTES: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: 0,
            notes: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < MAX_NOTES {
                self.notes.push(note());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn checks(&self) -> usize {
        self.suites.iter().map(|s| s.checks).sum()
    }

    pub fn failures(&self) -> usize {
        self.suites.iter().map(|s| s.failures).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random pairs for the rotation identities.
    pub rotation_samples: usize,
    /// Random ensembles for the algebraic identities and bounds.
    pub ensemble_samples: usize,
    /// Horizon of the reference-scenario run.
    pub trajectory_t_end: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            rotation_samples: 10_000,
            ensemble_samples: 1_000,
            trajectory_t_end: 80.0,
        }
    }
}

impl VerifyOptions {
    pub fn quick() -> Self {
        Self {
            rotation_samples: 1_000,
            ensemble_samples: 100,
            trajectory_t_end: 10.0,
            ..Self::default()
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    sample_ensemble(rng, 1, std::f64::consts::PI, 0.0)
        .map(|e| *e.position(0))
        .expect("valid sampling parameters")
}

/// Largest defect of each rotation identity for the pair `(z1, z2)`:
/// orthogonality, `R z1 = z2`, `R z2 = 2⟨z1,z2⟩ z2 − z1`, `R n = n` for
/// `n ∥ z1 × z2`, and `R_{z2→z1} = R_{z1→z2}ᵀ`.
pub fn rotation_identity_defects(z1: &Vec3, z2: &Vec3) -> Result<[f64; 5]> {
    let r = rotation_raw(z1, z2)?;
    let back = rotation_raw(z2, z1)?;
    let c = z1.dot(z2);
    let cross = z1.cross(z2);
    let fixed = if cross.norm() > 0.0 {
        (r * cross - cross).amax() / cross.norm()
    } else {
        0.0
    };
    Ok([
        (r.transpose() * r - crate::Mat3::identity()).amax(),
        (r * z1 - z2).amax(),
        (r * z2 - (2.0 * c * z2 - z1)).amax(),
        fixed,
        (back - r.transpose()).amax(),
    ])
}

/// Defect of transporting `e2` from `e1` to `(cos t, sin t, 0)` against
/// `(−sin t, cos t, 0)`, together with the defect of `e3` staying fixed.
pub fn equator_transport_defect(t: f64) -> Result<f64> {
    let z2 = Vec3::new(t.cos(), t.sin(), 0.0);
    let r = rotation_raw(&Vec3::x(), &z2)?;
    let a = (r * Vec3::y() - Vec3::new(-t.sin(), t.cos(), 0.0)).amax();
    let b = (r * Vec3::z() - Vec3::z()).amax();
    Ok(a.max(b))
}

/// `‖Ẋ − (AX + F)‖` relative to the largest of `‖Ẋ‖`, `‖AX‖`, `‖F‖`.
pub fn linearization_residual(e: &Ensemble, i: usize, j: usize, p: &ModelParams) -> Result<f64> {
    let d = rhs(e, p)?;
    linearization_residual_with(e, &d, i, j, p)
}

fn linearization_residual_with(
    e: &Ensemble,
    d: &crate::dynamics::StateDerivative,
    i: usize,
    j: usize,
    p: &ModelParams,
) -> Result<f64> {
    let x = pair_functional(e, i, j);
    let chain = pair_functional_rate(e, d, i, j);
    let ax = coefficient_matrix(p.kernel.psi0(), p.sigma).apply(&x);
    let f = inhomogeneous_term(e, i, j, p)?.as_vec();
    let scale = chain.norm().max(ax.norm()).max(f.norm());
    let diff = (chain - ax - f).norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Distance of `μ` from the negated largest real part of the eigenvalues of
/// `A`, computed by a general eigenvalue solver.
pub fn spectral_abscissa_defect(psi0: f64, sigma: f64) -> f64 {
    let a = *coefficient_matrix(psi0, sigma).as_matrix();
    let max_re = a
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    (spectral_abscissa(psi0, sigma) + max_re).abs()
}

/// Max-norm end-state error of the `N = 1` great circle `x = e1`,
/// `v = speed · e2` integrated to `t_end` with step `dt`.
pub fn great_circle_error(speed: f64, t_end: f64, dt: f64, projection: bool) -> Result<f64> {
    let p = ModelParams::new(paper_kernel(), 1.0)?;
    let steps = (t_end / dt).round() as usize;
    let mut e = Ensemble::new(vec![Vec3::x()], vec![Vec3::y() * speed])?;
    for _ in 0..steps {
        e = advance(&e, dt, &p, projection)?.ensemble;
    }
    let t = steps as f64 * dt;
    let (s, c) = (speed * t).sin_cos();
    let ex = (e.position(0) - Vec3::new(c, s, 0.0)).amax();
    let ev = (e.velocity(0) - Vec3::new(-s, c, 0.0) * speed).amax();
    Ok(ex.max(ev))
}

pub const ORDER_SPEED: f64 = 4.0;
pub const ORDER_T_END: f64 = 5.0;
pub const ORDER_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// `err(dt)/err(dt/2)` for each step in [`ORDER_STEPS`].
pub fn order_ratios(projection: bool) -> Result<Vec<f64>> {
    ORDER_STEPS
        .iter()
        .map(|&dt| {
            let coarse = great_circle_error(ORDER_SPEED, ORDER_T_END, dt, projection)?;
            let fine = great_circle_error(ORDER_SPEED, ORDER_T_END, dt / 2.0, projection)?;
            Ok(coarse / fine)
        })
        .collect()
}

fn builtin_kernels() -> Vec<Kernel> {
    [
        KernelSpec::Exponential { amplitude: 3.0 },
        KernelSpec::Linear { slope: 1.0 },
        KernelSpec::Quadratic { scale: 0.5 },
    ]
    .iter()
    .map(|s| s.build().expect("builtin kernel"))
    .collect()
}

/// Random valid ensemble with `N ∈ 2..=8`, positions in a cap of radius below
/// `π/2` (so no pair is near-antipodal), speeds up to 2, and σ in `[0.1, 5]`.
pub fn random_case<R: Rng>(rng: &mut R, kernels: &[Kernel]) -> Result<(Ensemble, ModelParams)> {
    let n = rng.random_range(2..=8);
    let spread = rng.random::<f64>() * 0.45 * std::f64::consts::PI;
    let vel = rng.random::<f64>() * 2.0;
    let sigma = 0.1 + rng.random::<f64>() * 4.9;
    let kernel = kernels[rng.random_range(0..kernels.len())].clone();
    Ok((
        sample_ensemble(rng, n, spread, vel)?,
        ModelParams::new(kernel, sigma)?,
    ))
}

fn rotation_suite(o: &VerifyOptions) -> SuiteResult {
    let mut s = SuiteResult::new("rotation identities");
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut done = 0;
    while done < o.rotation_samples {
        let (z1, z2) = (random_unit(&mut rng), random_unit(&mut rng));
        if (z1 + z2).norm() < 1e-3 {
            continue;
        }
        done += 1;
        match rotation_identity_defects(&z1, &z2) {
            Ok(d) => {
                let worst = d.iter().copied().fold(0.0, f64::max);
                s.record(worst <= 1e-12, || {
                    format!("defects {d:?} at {z1:?} → {z2:?}")
                });
            }
            Err(e) => s.record(false, || e.to_string()),
        }
    }
    for k in 0..100 {
        let t = -3.0 + 6.0 * k as f64 / 99.0;
        let defect = equator_transport_defect(t);
        s.record(matches!(defect, Ok(d) if d <= 1e-12), || {
            format!("equator transport at t = {t}: {defect:?}")
        });
    }
    s
}

fn kernel_suite() -> SuiteResult {
    let mut s = SuiteResult::new("kernel validation");
    for k in builtin_kernels() {
        let report = validate_kernel(&k, 10_000);
        s.record(report.passed(), || {
            format!("{}: {:?}", k.name(), report.failures)
        });
    }
    s
}

fn identity_suites(o: &VerifyOptions) -> Vec<SuiteResult> {
    let mut lin = SuiteResult::new("linearization identity");
    let mut diss = SuiteResult::new("dissipation identity");
    let mut bounds = SuiteResult::new("inhomogeneous-term bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.wrapping_add(1));
    let kernels = builtin_kernels();
    for _ in 0..o.ensemble_samples {
        let (e, p) = match random_case(&mut rng, &kernels) {
            Ok(c) => c,
            Err(err) => {
                lin.record(false, || err.to_string());
                continue;
            }
        };
        match rhs(&e, &p) {
            Ok(d) => {
                for i in 0..e.n() {
                    for j in (i + 1)..e.n() {
                        let r = linearization_residual_with(&e, &d, i, j, &p);
                        lin.record(matches!(r, Ok(v) if v <= 1e-9), || {
                            format!("pair ({i},{j}) of N = {}: {r:?}", e.n())
                        });
                    }
                }
            }
            Err(err) => lin.record(false, || err.to_string()),
        }
        let r = dissipation_residual(&e, &p);
        diss.record(
            matches!(&r, Ok(r) if r.residual.abs() <= 1e-10 * r.energy_rate.abs().max(1.0)),
            || format!("{r:?}"),
        );
        match check_inhomogeneous_bounds(&e, &p) {
            Ok(v) => {
                bounds.record(v.total() == 0, || format!("{v:?}"));
            }
            Err(err) => bounds.record(false, || err.to_string()),
        }
    }
    vec![lin, diss, bounds]
}

fn threshold_suite() -> SuiteResult {
    let mut s = SuiteResult::new("thresholds and X_M root");
    let k = paper_kernel();
    for sigma in [0.5, 1.0, 2.0, 5.0] {
        match thresholds(&k, sigma) {
            Ok(th) => {
                s.record(th.x_m_residual <= 1e-12, || {
                    format!("σ = {sigma}: residual {}", th.x_m_residual)
                });
                let kappa = x_m_coefficient(th.mu, aggregate_constant(&k, sigma), sigma);
                let changes = x_m_sign_changes(&k, kappa, 10_000);
                s.record(changes == 1, || {
                    format!("σ = {sigma}: {changes} sign changes")
                });
                s.record((th.e0 - th.v0 * th.v0 / 4.0).abs() <= 1e-14 * th.e0, || {
                    format!("σ = {sigma}: E0 ≠ V0²/4")
                });
                s.record(
                    th.delta == th.mu / 2.0 && th.x_m > 0.0 && th.x_m < 4.0,
                    || format!("σ = {sigma}: {th:?}"),
                );
            }
            Err(e) => s.record(false, || format!("σ = {sigma}: {e}")),
        }
    }
    for a in 0..10 {
        for b in 0..10 {
            let psi0 = 0.1 + a as f64;
            let sigma = 0.05 + 3.0 * b as f64;
            let d = spectral_abscissa_defect(psi0, sigma);
            s.record(d <= 1e-7 * psi0.max(1.0), || {
                format!("μ({psi0}, {sigma}) off by {d}")
            });
        }
    }
    s
}

fn order_suite() -> SuiteResult {
    let mut s = SuiteResult::new("RK4 order");
    for projection in [false, true] {
        match order_ratios(projection) {
            Ok(ratios) => {
                for r in ratios {
                    s.record((12.0..=20.0).contains(&r), || {
                        format!("projection {projection}: ratio {r}")
                    });
                }
            }
            Err(e) => s.record(false, || e.to_string()),
        }
    }
    s
}

fn trajectory_suite(o: &VerifyOptions) -> SuiteResult {
    let mut s = SuiteResult::new("reference trajectory");
    let scenario = match paper_scenario(1.0) {
        Ok(sc) => sc,
        Err(e) => {
            s.record(false, || e.to_string());
            return s;
        }
    };
    let cfg = SimConfig {
        t_end: o.trajectory_t_end,
        ..SimConfig::default()
    };
    let traj = match simulate(&scenario.ensemble, &scenario.params, &cfg) {
        Ok(t) => t,
        Err(e) => {
            s.record(false, || e.to_string());
            return s;
        }
    };
    let drift = traj.max_step_drift;
    s.record(drift.radial <= 1e-10 && drift.tangency <= 1e-9, || {
        format!("drift {drift:?}")
    });
    let e0 = traj.frames[0].diagnostics.e_total;
    for w in traj.frames.windows(2) {
        let (a, b) = (&w[0].diagnostics, &w[1].diagnostics);
        s.record(b.e_total <= a.e_total + 1e-8 * a.e_total.max(1.0), || {
            format!("energy rose at t = {}: {} → {}", b.t, a.e_total, b.e_total)
        });
        s.record(b.e_total + b.dissipated <= e0 + 1e-6, || {
            format!("energy budget exceeded at t = {}", b.t)
        });
        s.record(b.d_x * b.d_x <= b.x_max && b.d_v * b.d_v <= b.x_max, || {
            format!("diameters exceed X_max at t = {}", b.t)
        });
    }
    let kernel = &scenario.params.kernel;
    let check = velocity_bound_check(
        &traj,
        kernel,
        scenario.params.sigma,
        trajectory_psi_m(&traj, kernel),
    );
    s.record(!check.vacuous && check.worst_violation <= 1e-8, || {
        format!("{check:?}")
    });
    s
}

pub fn run_suite(o: &VerifyOptions) -> VerifyReport {
    let mut suites = vec![rotation_suite(o), kernel_suite()];
    suites.extend(identity_suites(o));
    suites.push(threshold_suite());
    suites.push(order_suite());
    suites.push(trajectory_suite(o));
    VerifyReport { suites }
}
