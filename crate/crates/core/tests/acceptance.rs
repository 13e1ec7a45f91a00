//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when an earlier criterion fails. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphereflock::admissibility::{
    aggregate_constant, check_inhomogeneous_bounds, check_initial, thresholds, x_m_coefficient,
    x_m_sign_changes,
};
use sphereflock::diagnostics::{
    dissipation_residual, fit_decay_rate, trajectory_psi_m, velocity_bound_check,
};
use sphereflock::dynamics::{rhs, ModelParams};
use sphereflock::integrator::{simulate, SimConfig, Trajectory};
use sphereflock::kernel::{paper_kernel, KernelSpec};
use sphereflock::scenario::{paper_scenario, random_scenario};
use sphereflock::verify::{
    equator_transport_defect, linearization_residual, order_ratios, random_case, random_unit,
    rotation_identity_defects,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn paper_run(sigma: f64) -> Trajectory {
    let s = paper_scenario(sigma).expect("paper scenario");
    simulate(&s.ensemble, &s.params, &SimConfig::default()).expect("paper run completes")
}

fn sigma1_run() -> &'static Trajectory {
    static RUN: OnceLock<Trajectory> = OnceLock::new();
    RUN.get_or_init(|| paper_run(1.0))
}

fn kernels() -> Vec<sphereflock::kernel::Kernel> {
    [
        KernelSpec::Exponential { amplitude: 3.0 },
        KernelSpec::Linear { slope: 1.0 },
        KernelSpec::Quadratic { scale: 0.5 },
    ]
    .iter()
    .map(|s| s.build().unwrap())
    .collect()
}

fn c1_rotation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 10_000 {
        let (z1, z2) = (random_unit(&mut rng), random_unit(&mut rng));
        if (z1 + z2).norm() <= 1e-8 {
            continue;
        }
        pairs += 1;
        let d = rotation_identity_defects(&z1, &z2).expect("non-antipodal");
        worst = d.iter().copied().fold(worst, f64::max);
    }
    let mut equator: f64 = 0.0;
    for k in 0..100 {
        // Midpoints of (−π, π); t = ±π is the antipode of e1.
        let t = -PI + 2.0 * PI * (k as f64 + 0.5) / 100.0;
        equator = equator.max(equator_transport_defect(t).unwrap());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && equator <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "worst identity defect {worst:.2e}, equator defect {equator:.2e}, {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_linearization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ks = kernels();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for _ in 0..1_000 {
        let (e, p) = random_case(&mut rng, &ks).unwrap();
        for i in 0..e.n() {
            for j in (i + 1)..e.n() {
                worst = worst.max(linearization_residual(&e, i, j, &p).unwrap());
                pairs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "{pairs} pairs, worst relative residual {worst:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_dissipation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ks = kernels();
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let (e, p) = random_case(&mut rng, &ks).unwrap();
        let r = dissipation_residual(&e, &p).unwrap();
        worst = worst.max(r.residual.abs() / r.energy_rate.abs().max(1.0));
    }
    let traj = sigma1_run();
    let e0 = traj.frames[0].diagnostics.e_total;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_budget = f64::NEG_INFINITY;
    for w in traj.frames.windows(2) {
        let (a, b) = (&w[0].diagnostics, &w[1].diagnostics);
        worst_rise = worst_rise.max(b.e_total - a.e_total);
        worst_budget = worst_budget.max(b.e_total + b.dissipated - e0);
    }
    outcome(
        worst <= 1e-10 && worst_rise <= 1e-8 && worst_budget <= 1e-6,
        format!(
            "identity residual {worst:.2e}; largest frame-to-frame rise {worst_rise:.2e}; \
             E(t) + ∫D − E(0) ≤ {worst_budget:.2e}"
        ),
    )
}

fn c4_constraints() -> Outcome {
    let d = sigma1_run().max_step_drift;
    outcome(
        d.radial <= 1e-10 && d.tangency <= 1e-9,
        format!(
            "max pre-projection drift radial {:.2e}, tangency {:.2e}",
            d.radial, d.tangency
        ),
    )
}

fn c5_order() -> Outcome {
    let off = order_ratios(false).unwrap();
    let on = order_ratios(true).unwrap();
    let ok = off.iter().chain(&on).all(|r| (12.0..=20.0).contains(r));
    outcome(
        ok,
        format!("ratios without projection {off:.3?}, with projection {on:.3?}"),
    )
}

fn c6_rendezvous() -> Outcome {
    let traj = sigma1_run();
    let dx0 = traj.frames[0].diagnostics.d_x;
    let dx_end = traj.last().diagnostics.d_x;
    let fit = fit_decay_rate(&traj.series(|f| f.d_x), (10.0, 80.0)).unwrap();
    let delta = thresholds(&paper_kernel(), 1.0).unwrap().delta;
    outcome(
        dx_end <= 0.1 * dx0 && fit.r_squared >= 0.99,
        format!(
            "D_x(80)/D_x(0) = {:.4}, fitted rate {:.5} (r² = {:.5}), δ = {delta:.5}",
            dx_end / dx0,
            fit.rate,
            fit.r_squared
        ),
    )
}

fn c7_inadmissible() -> Outcome {
    let s = paper_scenario(5.0).unwrap();
    let report = check_initial(&s.ensemble, &s.params).unwrap();
    let margin = report.x_initial / report.mu_over_two_sigma;
    let traj = simulate(&s.ensemble, &s.params, &SimConfig::default());
    let (completed, fit) = match &traj {
        Ok(t) => (
            true,
            fit_decay_rate(&t.series(|f| f.d_x), (10.0, 80.0)).ok(),
        ),
        Err(_) => (false, None),
    };
    outcome(
        !report.admissible && margin >= 10.0 && completed,
        format!(
            "admissible = {}, X(0)/(μ/2σ) = {margin:.2}, run completed = {completed}, \
             fitted rate {}",
            report.admissible,
            fit.map(|f| format!("{:.5} (r² = {:.5})", f.rate, f.r_squared))
                .unwrap_or_else(|| "n/a".into())
        ),
    )
}

fn c8_theorem() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::new(paper_kernel(), 1.0).unwrap();
    let delta = thresholds(&p.kernel, 1.0).unwrap().delta;
    let mut admissible = 0;
    let mut bound_holds = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_margins = (0.0f64, 0.0f64, 0.0f64);
    let seeds = 20;
    for seed in 0..seeds {
        let s = random_scenario(seed, 6, PI / 64.0, 0.01, p.clone()).unwrap();
        let report = check_initial(&s.ensemble, &s.params).unwrap();
        admissible += usize::from(report.admissible);
        worst_margins.0 = worst_margins.0.max(report.margins.velocity);
        worst_margins.1 = worst_margins.1.max(report.margins.energy);
        worst_margins.2 = worst_margins.2.max(report.margins.pair_functional);
        let traj = simulate(&s.ensemble, &s.params, &SimConfig::default()).unwrap();
        let dx0 = traj.frames[0].diagnostics.d_x;
        let ratio = traj
            .frames
            .iter()
            .map(|f| f.diagnostics.d_x / (dx0 * (-delta * f.t()).exp()))
            .fold(0.0, f64::max);
        worst_ratio = worst_ratio.max(ratio);
        bound_holds += usize::from(ratio <= 1.05);
    }
    let elapsed = start.elapsed();
    outcome(
        admissible == seeds as usize
            && bound_holds == seeds as usize
            && elapsed < Duration::from_secs(300),
        format!(
            "admissible {admissible}/{seeds} (worst margins 𝒱 {:.3e}, E {:.3e}, X {:.3e}); \
             decay bound {bound_holds}/{seeds} (max D_x/(D_x(0)e^(−δt)) = {worst_ratio:.4}); {:.1} s",
            worst_margins.0,
            worst_margins.1,
            worst_margins.2,
            elapsed.as_secs_f64()
        ),
    )
}

fn c9_bounds() -> Outcome {
    let traj = sigma1_run();
    let k = paper_kernel();
    let check = velocity_bound_check(traj, &k, 1.0, trajectory_psi_m(traj, &k));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ks = kernels();
    let mut violations = 0;
    let mut pairs = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10_000 {
        let (e, p) = random_case(&mut rng, &ks).unwrap();
        let v = check_inhomogeneous_bounds(&e, &p).unwrap();
        violations += v.total();
        pairs += v.pairs_checked;
        worst_ratio = worst_ratio.max(v.worst_ratio);
    }
    outcome(
        !check.vacuous && check.worst_violation <= 1e-8 && violations == 0,
        format!(
            "velocity bound worst violation {:.3e} (ψ_m = {:.4}); F bounds: {violations} \
             violations over {pairs} pairs, worst value/bound {worst_ratio:.3e}",
            check.worst_violation, check.psi_m
        ),
    )
}

fn c10_fixed_point() -> Outcome {
    let k = paper_kernel();
    let mut ok = true;
    let mut parts = Vec::new();
    for sigma in [0.5, 1.0, 2.0, 5.0] {
        let th = thresholds(&k, sigma).unwrap();
        let kappa = x_m_coefficient(th.mu, aggregate_constant(&k, sigma), sigma);
        let changes = x_m_sign_changes(&k, kappa, 10_000);
        ok &= th.x_m_residual <= 1e-12 && changes == 1;
        parts.push(format!(
            "σ={sigma}: X_M={:.6e} residual {:.1e} sign changes {changes}",
            th.x_m, th.x_m_residual
        ));
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    // Touch rhs so a broken build of the model fails loudly before timing starts.
    let warm = paper_scenario(1.0).unwrap();
    rhs(&warm.ensemble, &warm.params).unwrap();

    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("rotation-operator identities", c1_rotation),
        ("linearization identity", c2_linearization),
        ("dissipation identity", c3_dissipation),
        ("constraint preservation", c4_constraints),
        ("integrator order", c5_order),
        ("exponential rendezvous", c6_rendezvous),
        ("inadmissibility at sigma = 5", c7_inadmissible),
        ("guarantee on constructed admissible data", c8_theorem),
        ("velocity and inhomogeneous-term bounds", c9_bounds),
        ("X_M fixed point", c10_fixed_point),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!("criterion {:>2} {status} {name}: {}", i + 1, result.detail);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
