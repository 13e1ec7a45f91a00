//! Initial data: the six-agent configuration of the reference experiment and
//! seeded random clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Ensemble, ModelParams};
use crate::error::{Error, Result};
use crate::integrator::SimConfig;
use crate::kernel::paper_kernel;
use crate::Vec3;

/// Largest normal velocity component that construction silently projects away.
pub const TANGENCY_REPAIR_LIMIT: f64 = 1e-3;

pub const PAPER_POSITIONS: [[f64; 3]; 6] = [
    [-0.3903, -0.4756, 0.7883],
    [-0.5800, -0.7067, 0.4052],
    [-0.6746, -0.2998, 0.6746],
    [-0.4472, 0.0000, 0.8944],
    [-0.1249, 0.2084, 0.9700],
    [-0.6236, 0.6236, 0.4714],
];

pub const PAPER_VELOCITIES: [[f64; 3]; 6] = [
    [-0.4707, 0.1259, -0.1571],
    [-0.0986, 0.4355, 0.6185],
    [0.1892, 0.1666, 0.2631],
    [0.4605, 0.5046, 0.2302],
    [-0.4914, 0.7722, -0.2292],
    [-0.0148, 0.1342, -0.1971],
];

/// How far the supplied state was from the constraint set before it was
/// renormalised and projected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    /// `max_i |‖x_i‖ − 1|` of the input.
    pub radial: f64,
    /// `max_i |⟨v_i, x_i/‖x_i‖⟩|` of the input.
    pub tangency: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub ensemble: Ensemble,
    pub params: ModelParams,
    pub sim: SimConfig,
    pub adjustment: Adjustment,
}

/// Renormalises positions and projects velocities, rejecting velocities
/// whose normal component exceeds [`TANGENCY_REPAIR_LIMIT`].
pub fn constrain(positions: &[Vec3], velocities: &[Vec3]) -> Result<(Ensemble, Adjustment)> {
    if positions.len() != velocities.len() {
        return Err(Error::InvalidEnsemble(format!(
            "{} positions but {} velocities",
            positions.len(),
            velocities.len()
        )));
    }
    let mut adj = Adjustment::default();
    let mut xs = Vec::with_capacity(positions.len());
    let mut vs = Vec::with_capacity(positions.len());
    for (i, (x, v)) in positions.iter().zip(velocities).enumerate() {
        let norm = x.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "position {i} cannot be normalised"
            )));
        }
        let u = x / norm;
        let normal = v.dot(&u);
        if normal.abs() > TANGENCY_REPAIR_LIMIT {
            return Err(Error::InvalidEnsemble(format!(
                "velocity {i} has normal component {normal:e} > {TANGENCY_REPAIR_LIMIT:e}"
            )));
        }
        adj.radial = adj.radial.max((norm - 1.0).abs());
        adj.tangency = adj.tangency.max(normal.abs());
        xs.push(u);
        vs.push(v - u * normal);
    }
    Ok((Ensemble::new(xs, vs)?, adj))
}

/// The six agents of the reference experiment with the exponential kernel
/// `ψ(r) = 3(e^{2−r} − 1)`.
pub fn paper_scenario(sigma: f64) -> Result<Scenario> {
    let xs: Vec<Vec3> = PAPER_POSITIONS.iter().map(|a| Vec3::from(*a)).collect();
    let vs: Vec<Vec3> = PAPER_VELOCITIES.iter().map(|a| Vec3::from(*a)).collect();
    let (ensemble, adjustment) = constrain(&xs, &vs)?;
    Ok(Scenario {
        label: format!("paper-sigma{sigma}"),
        ensemble,
        params: ModelParams::new(paper_kernel(), sigma)?,
        sim: SimConfig::default(),
        adjustment,
    })
}

/// Uniform point in the geodesic cap of angular radius `spread` about `center`.
fn sample_cap<R: Rng>(rng: &mut R, center: &Vec3, spread: f64) -> Vec3 {
    let cos_theta = 1.0 - rng.random::<f64>() * (1.0 - spread.cos());
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let helper = if center.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let a = center.cross(&helper).normalize();
    let b = center.cross(&a);
    center * cos_theta + (a * phi.cos() + b * phi.sin()) * sin_theta
}

fn sample_normal<R: Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

fn sample_direction<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let g = sample_normal(rng);
        let n = g.norm();
        if n > 1e-6 {
            return g / n;
        }
    }
}

/// `n` agents in a cap of radius `pos_spread` about a random center, with
/// velocities `vel_scale` times tangent-projected standard normals.
pub fn sample_ensemble<R: Rng>(
    rng: &mut R,
    n: usize,
    pos_spread: f64,
    vel_scale: f64,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidEnsemble("no agents".into()));
    }
    if !(pos_spread.is_finite() && (0.0..=std::f64::consts::PI).contains(&pos_spread)) {
        return Err(Error::Config(format!(
            "pos_spread must lie in [0, π], got {pos_spread}"
        )));
    }
    if !(vel_scale.is_finite() && vel_scale >= 0.0) {
        return Err(Error::Config(format!(
            "vel_scale must be ≥ 0, got {vel_scale}"
        )));
    }
    let center = sample_direction(rng);
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sample_cap(rng, &center, pos_spread).normalize();
        let g = sample_normal(rng);
        xs.push(x);
        vs.push((g - x * g.dot(&x)) * vel_scale);
    }
    Ensemble::new(xs, vs)
}

pub fn random_scenario(
    seed: u64,
    n: usize,
    pos_spread: f64,
    vel_scale: f64,
    p: ModelParams,
) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ensemble = sample_ensemble(&mut rng, n, pos_spread, vel_scale)?;
    Ok(Scenario {
        label: format!("random-seed{seed}-n{n}"),
        ensemble,
        params: p,
        sim: SimConfig {
            seed,
            ..SimConfig::default()
        },
        adjustment: Adjustment::default(),
    })
}
