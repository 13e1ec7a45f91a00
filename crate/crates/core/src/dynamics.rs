//! Model right-hand side and the linear system satisfied by the pair functional.
//!
//! For a pair `(i, j)` the triple
//!
//! ```text
//!   X = (‖x_i − x_j‖², ⟨v_i − v_j, x_i − x_j⟩, ‖v_i − v_j‖²)
//! ```
//!
//! obeys `dX/dt = A X + F` with the constant matrix
//!
//! ```text
//!       ⎡  0    2     0  ⎤
//!   A = ⎢ −σ   −ψ₀    1  ⎥
//!       ⎣  0  −2σ   −2ψ₀ ⎦
//! ```
//!
//! and an inhomogeneous term `F` that is quadratic or higher in the diameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_raw, TangentVector, UnitVector};
use crate::kernel::Kernel;
use crate::{Mat3, Vec3};

/// Tolerance on `|‖x_i‖ − 1|` for a valid ensemble.
pub const RADIAL_TOLERANCE: f64 = 1e-9;
/// Tolerance on `|⟨v_i, x_i⟩|` for a valid ensemble.
pub const TANGENCY_TOLERANCE: f64 = 1e-8;

#[cfg(feature = "parallel")]
const PARALLEL_MIN_AGENTS: usize = 32;

/// Positions and velocities of `N` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
}

impl Ensemble {
    /// Checked constructor: every position unit length and every velocity
    /// tangent, within [`RADIAL_TOLERANCE`] and [`TANGENCY_TOLERANCE`].
    pub fn new(positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Result<Self> {
        let e = Self::from_raw(positions, velocities)?;
        if e.n() == 0 {
            return Err(Error::InvalidEnsemble("no agents".into()));
        }
        for (i, (x, v)) in e.positions.iter().zip(&e.velocities).enumerate() {
            if !(x.iter().chain(v.iter()).all(|c| c.is_finite())) {
                return Err(Error::InvalidEnsemble(format!(
                    "agent {i} has non-finite state"
                )));
            }
            let radial = (x.norm() - 1.0).abs();
            if radial > RADIAL_TOLERANCE {
                return Err(Error::InvalidEnsemble(format!(
                    "agent {i} is off the sphere by {radial:e}"
                )));
            }
            let tangency = v.dot(x).abs();
            if tangency > TANGENCY_TOLERANCE {
                return Err(Error::InvalidEnsemble(format!(
                    "velocity {i} has normal component {tangency:e}"
                )));
            }
        }
        Ok(e)
    }

    /// Unchecked constructor for states that are allowed to drift off the
    /// constraint set (integrator stages, perturbation tests).
    pub fn from_raw(positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        Ok(Self {
            positions,
            velocities,
        })
    }

    pub fn from_points(points: &[(UnitVector, TangentVector)]) -> Result<Self> {
        let mut xs = Vec::with_capacity(points.len());
        let mut vs = Vec::with_capacity(points.len());
        for (x, v) in points {
            if v.base() != x {
                return Err(Error::InvalidEnsemble(
                    "velocity base differs from position".into(),
                ));
            }
            xs.push(*x.as_vec());
            vs.push(*v.as_vec());
        }
        Self::new(xs, vs)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.velocities
    }

    pub fn position(&self, i: usize) -> &Vec3 {
        &self.positions[i]
    }

    pub fn velocity(&self, i: usize) -> &Vec3 {
        &self.velocities[i]
    }

    /// Reorders agents; `order[k]` is the old index placed at slot `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            positions: order.iter().map(|&k| self.positions[k]).collect(),
            velocities: order.iter().map(|&k| self.velocities[k]).collect(),
        }
    }

    /// `self + h · d`, agentwise.
    pub fn advanced(&self, d: &StateDerivative, h: f64) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .zip(&d.dx)
                .map(|(x, dx)| x + dx * h)
                .collect(),
            velocities: self
                .velocities
                .iter()
                .zip(&d.dv)
                .map(|(v, dv)| v + dv * h)
                .collect(),
        }
    }

    /// Renormalises positions and removes normal velocity components.
    pub fn projected(&self) -> Self {
        let positions: Vec<Vec3> = self.positions.iter().map(|x| x / x.norm()).collect();
        let velocities = self
            .velocities
            .iter()
            .zip(&positions)
            .map(|(v, x)| v - x * v.dot(x))
            .collect();
        Self {
            positions,
            velocities,
        }
    }
}

/// Rate and bonding parameters of the model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub kernel: Kernel,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(kernel: Kernel, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be ≥ 0, got {sigma}")));
        }
        Ok(Self { kernel, sigma })
    }
}

/// Time derivative of an [`Ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub dx: Vec<Vec3>,
    pub dv: Vec<Vec3>,
}

/// `λ_i = −‖v_i‖²/‖x_i‖² − (σ/N) Σ_k ⟨x_k − x_i, x_i⟩/⟨x_i, x_i⟩`.
pub fn lagrange_multiplier(e: &Ensemble, i: usize, p: &ModelParams) -> f64 {
    let xi = e.position(i);
    let vi = e.velocity(i);
    let xx = xi.dot(xi);
    let bonding: f64 = e.positions().iter().map(|xk| (xk - xi).dot(xi) / xx).sum();
    -vi.norm_squared() / xx - p.sigma / e.n() as f64 * bonding
}

fn acceleration(e: &Ensemble, i: usize, p: &ModelParams) -> Result<(Vec3, f64)> {
    let n = e.n() as f64;
    let xi = e.position(i);
    let vi = e.velocity(i);
    let mut coupling = Vec3::zeros();
    let mut bonding = Vec3::zeros();
    let mut dissipation = 0.0;
    for (xk, vk) in e.positions().iter().zip(e.velocities()) {
        let r = rotation_raw(xk, xi)?;
        let psi = p.kernel.rate((xi - xk).norm());
        let rel = r * vk - vi;
        coupling += psi * rel;
        dissipation += psi * rel.norm_squared();
        bonding += xk - xi.dot(xk) * xi;
    }
    let dv = -vi.norm_squared() / xi.norm_squared() * xi + coupling / n + p.sigma / n * bonding;
    Ok((dv, dissipation))
}

/// Right-hand side of the model. The sum over `k` always runs in ascending
/// order, so results do not depend on how agents are split across threads.
pub fn rhs(e: &Ensemble, p: &ModelParams) -> Result<StateDerivative> {
    rhs_with_dissipation(e, p).map(|(d, _)| d)
}

/// [`rhs`] together with the dissipation rate
/// `Σ_{i,k} (ψ_ik/N²) ‖R_{x_k→x_i} v_k − v_i‖²`, which shares its rotations.
pub fn rhs_with_dissipation(e: &Ensemble, p: &ModelParams) -> Result<(StateDerivative, f64)> {
    let per_agent = accelerations(e, p)?;
    let n = e.n() as f64;
    let mut dv = Vec::with_capacity(per_agent.len());
    let mut dissipation = 0.0;
    for (a, d) in per_agent {
        dv.push(a);
        dissipation += d;
    }
    Ok((
        StateDerivative {
            dx: e.velocities().to_vec(),
            dv,
        },
        dissipation / (n * n),
    ))
}

#[cfg(feature = "parallel")]
fn accelerations(e: &Ensemble, p: &ModelParams) -> Result<Vec<(Vec3, f64)>> {
    use rayon::prelude::*;
    if e.n() >= PARALLEL_MIN_AGENTS {
        (0..e.n())
            .into_par_iter()
            .map(|i| acceleration(e, i, p))
            .collect()
    } else {
        (0..e.n()).map(|i| acceleration(e, i, p)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn accelerations(e: &Ensemble, p: &ModelParams) -> Result<Vec<(Vec3, f64)>> {
    (0..e.n()).map(|i| acceleration(e, i, p)).collect()
}

/// `X^{ij} = (‖x_i − x_j‖², ⟨v_i − v_j, x_i − x_j⟩, ‖v_i − v_j‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFunctional {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl PairFunctional {
    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.x1, self.x2, self.x3)
    }

    pub fn norm(&self) -> f64 {
        self.as_vec().norm()
    }
}

pub fn pair_functional(e: &Ensemble, i: usize, j: usize) -> PairFunctional {
    let dx = e.position(i) - e.position(j);
    let dv = e.velocity(i) - e.velocity(j);
    PairFunctional {
        x1: dx.norm_squared(),
        x2: dv.dot(&dx),
        x3: dv.norm_squared(),
    }
}

/// `dX^{ij}/dt` by the chain rule through a precomputed [`rhs`]:
/// `(2X₂, X₃ + ⟨dv_i − dv_j, x_i − x_j⟩, 2⟨dv_i − dv_j, v_i − v_j⟩)`.
pub fn pair_functional_rate(e: &Ensemble, d: &StateDerivative, i: usize, j: usize) -> Vec3 {
    let dx = e.position(i) - e.position(j);
    let dv = e.velocity(i) - e.velocity(j);
    let da = d.dv[i] - d.dv[j];
    Vec3::new(
        2.0 * dv.dot(&dx),
        dv.norm_squared() + da.dot(&dx),
        2.0 * da.dot(&dv),
    )
}

/// The constant matrix `A` of the pair system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrix(Mat3);

impl CoefficientMatrix {
    pub fn as_matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, x: &PairFunctional) -> Vec3 {
        self.0 * x.as_vec()
    }
}

pub fn coefficient_matrix(psi0: f64, sigma: f64) -> CoefficientMatrix {
    #[rustfmt::skip]
    let a = Mat3::new(
        0.0,          2.0,          0.0,
        -sigma,       -psi0,        1.0,
        0.0,          -2.0 * sigma, -2.0 * psi0,
    );
    CoefficientMatrix(a)
}

/// `F^{ij} = (0, F₂, F₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousTerm {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl InhomogeneousTerm {
    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.f1, self.f2, self.f3)
    }

    pub fn norm(&self) -> f64 {
        self.as_vec().norm()
    }
}

/// The inhomogeneous term of the pair system, term by term as displayed in
/// its definition (kinetic, ψ₀-transport, two kernel-deviation and two
/// bonding contributions per component).
pub fn inhomogeneous_term(
    e: &Ensemble,
    i: usize,
    j: usize,
    p: &ModelParams,
) -> Result<InhomogeneousTerm> {
    let n = e.n() as f64;
    let psi0 = p.kernel.psi0();
    let sigma = p.sigma;
    let (xi, xj) = (e.position(i), e.position(j));
    let (vi, vj) = (e.velocity(i), e.velocity(j));
    let dx = xi - xj;
    let dv = vi - vj;
    let dx2 = dx.norm_squared();

    let mut f2 = -(vi.norm_squared() + vj.norm_squared()) / 2.0 * dx2;
    let mut f3 = 2.0 * (-vi.norm_squared() * xi + vj.norm_squared() * xj).dot(&dv);

    let (mut transport_x, mut transport_v) = (0.0, 0.0);
    let (mut dev_i_x, mut dev_i_v) = (0.0, 0.0);
    let (mut dev_j_x, mut dev_j_v) = (0.0, 0.0);
    let (mut bond_i, mut bond_j) = (0.0, 0.0);
    let (mut quartic_i, mut quartic_j) = (0.0, 0.0);

    for (xk, vk) in e.positions().iter().zip(e.velocities()) {
        let to_i = rotation_raw(xk, xi)? * vk;
        let to_j = rotation_raw(xk, xj)? * vk;
        let psi_ik = p.kernel.rate((xi - xk).norm());
        let psi_jk = p.kernel.rate((xj - xk).norm());

        let diff = to_i - to_j;
        transport_x += diff.dot(&dx);
        transport_v += diff.dot(&dv);

        let rel_i = to_i - vi;
        let rel_j = to_j - vj;
        dev_i_x += (psi_ik - psi0) * rel_i.dot(&dx);
        dev_i_v += (psi_ik - psi0) * rel_i.dot(&dv);
        dev_j_x += (psi_jk - psi0) * rel_j.dot(&dx);
        dev_j_v += (psi_jk - psi0) * rel_j.dot(&dv);

        quartic_i += (xk - xi).norm_squared() * dx2;
        quartic_j += (xk - xj).norm_squared() * dx2;

        bond_i += (xi.dot(xk) - 1.0) * xi.dot(vj);
        bond_j += (xj.dot(xk) - 1.0) * xj.dot(vi);
    }

    f2 += psi0 / n * transport_x + dev_i_x / n - dev_j_x / n
        + sigma / (4.0 * n) * quartic_i
        + sigma / (4.0 * n) * quartic_j;
    f3 += 2.0 * psi0 / n * transport_v + 2.0 * dev_i_v / n - 2.0 * dev_j_v / n
        + 2.0 * sigma / n * bond_i
        + 2.0 * sigma / n * bond_j;

    Ok(InhomogeneousTerm { f1: 0.0, f2, f3 })
}

/// `μ`, the negated largest real part of the eigenvalues
/// `{−ψ₀, −ψ₀ ± √(ψ₀² − 4σ)}` of `A`.
pub fn spectral_abscissa(psi0: f64, sigma: f64) -> f64 {
    let disc = psi0 * psi0 - 4.0 * sigma;
    if disc <= 0.0 {
        psi0
    } else {
        // ψ₀ − √(ψ₀² − 4σ) without the cancellation.
        4.0 * sigma / (psi0 + disc.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{paper_kernel, KernelSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(sigma: f64) -> ModelParams {
        ModelParams::new(paper_kernel(), sigma).unwrap()
    }

    fn e1() -> Vec3 {
        Vec3::x()
    }
    fn e2() -> Vec3 {
        Vec3::y()
    }
    fn e3() -> Vec3 {
        Vec3::z()
    }

    #[test]
    fn multiplier_single_agent() {
        let e = Ensemble::new(vec![e1()], vec![e2()]).unwrap();
        assert_eq!(lagrange_multiplier(&e, 0, &params(3.0)), -1.0);
    }

    #[test]
    fn multiplier_two_agents_at_rest() {
        let sigma = 1.7;
        let e = Ensemble::new(vec![e1(), e2()], vec![Vec3::zeros(), Vec3::zeros()]).unwrap();
        assert_relative_eq!(lagrange_multiplier(&e, 0, &params(sigma)), sigma / 2.0);
    }

    #[test]
    fn multiplier_vanishes_on_resting_cluster() {
        let x = Vec3::new(0.0, 0.6, 0.8);
        let e = Ensemble::new(vec![x; 3], vec![Vec3::zeros(); 3]).unwrap();
        assert_eq!(lagrange_multiplier(&e, 1, &params(2.0)), 0.0);
    }

    #[test]
    fn rhs_single_agent_is_great_circle() {
        let e = Ensemble::new(vec![e1()], vec![e2()]).unwrap();
        let d = rhs(&e, &params(1.0)).unwrap();
        assert_eq!(d.dx[0], e2());
        assert_abs_diff_eq!(d.dv[0], -e1(), epsilon = 1e-15);
    }

    #[test]
    fn rhs_coincident_pair() {
        let x = Vec3::new(0.0, 0.6, 0.8);
        let v = Vec3::new(0.3, 0.0, 0.0);
        let e = Ensemble::new(vec![x, x], vec![v, v]).unwrap();
        let d = rhs(&e, &params(1.0)).unwrap();
        assert_eq!(d.dv[0], d.dv[1]);
        assert_abs_diff_eq!(d.dv[0], -v.norm_squared() * x, epsilon = 1e-15);
    }

    #[test]
    fn rhs_rejects_antipodal_pair() {
        let e = Ensemble::new(vec![e3(), -e3()], vec![Vec3::zeros(); 2]).unwrap();
        assert!(rhs(&e, &params(1.0)).unwrap_err().is_antipodal());
    }

    #[test]
    fn rhs_matches_multiplier_form() {
        // v̇_i = λ_i x_i + coupling + (σ/N) Σ (x_k − x_i) on the sphere.
        let xs = vec![
            Vec3::new(0.0, 0.6, 0.8),
            Vec3::new(0.6, 0.0, 0.8),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let vs = vec![
            Vec3::new(0.2, -0.32, 0.24),
            Vec3::new(-0.4, 0.1, 0.3),
            Vec3::new(0.05, 0.1, 0.0),
        ];
        let e = Ensemble::new(xs, vs).unwrap();
        let p = params(1.3);
        let d = rhs(&e, &p).unwrap();
        let n = e.n() as f64;
        for i in 0..e.n() {
            let xi = e.position(i);
            let mut coupling = Vec3::zeros();
            let mut bonding = Vec3::zeros();
            for k in 0..e.n() {
                let r = rotation_raw(e.position(k), xi).unwrap();
                let psi = p.kernel.rate((xi - e.position(k)).norm());
                coupling += psi / n * (r * e.velocity(k) - e.velocity(i));
                bonding += p.sigma / n * (e.position(k) - xi);
            }
            let expected = lagrange_multiplier(&e, i, &p) * xi + coupling + bonding;
            assert_abs_diff_eq!(d.dv[i], expected, epsilon = 1e-13);
            // d/dt ⟨v_i, x_i⟩ = ⟨v̇_i, x_i⟩ + ‖v_i‖² = 0
            assert!((d.dv[i].dot(xi) + e.velocity(i).norm_squared()).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_functional_examples() {
        let e = Ensemble::new(vec![e1(), e2()], vec![e3(), e3()]).unwrap();
        assert_eq!(
            pair_functional(&e, 0, 0),
            PairFunctional {
                x1: 0.0,
                x2: 0.0,
                x3: 0.0
            }
        );
        assert_eq!(
            pair_functional(&e, 0, 1),
            PairFunctional {
                x1: 2.0,
                x2: 0.0,
                x3: 0.0
            }
        );

        let e = Ensemble::new(vec![e1(), e2()], vec![e2(), e1()]).unwrap();
        assert_eq!(
            pair_functional(&e, 0, 1),
            PairFunctional {
                x1: 2.0,
                x2: -2.0,
                x3: 2.0
            }
        );
    }

    #[test]
    fn coefficient_matrix_examples() {
        let a = coefficient_matrix(1.0, 1.0);
        let expected = Mat3::new(0.0, 2.0, 0.0, -1.0, -1.0, 1.0, 0.0, -2.0, -2.0);
        assert_eq!(*a.as_matrix(), expected);
        let a = coefficient_matrix(2.0, 3.0);
        let expected = Mat3::new(0.0, 2.0, 0.0, -3.0, -2.0, 1.0, 0.0, -6.0, -4.0);
        assert_eq!(*a.as_matrix(), expected);
        for (psi0, sigma) in [(0.3, 7.0), (19.0, 1.0), (2.5, 0.1)] {
            assert_relative_eq!(
                coefficient_matrix(psi0, sigma).as_matrix().trace(),
                -3.0 * psi0
            );
        }
    }

    #[test]
    fn inhomogeneous_term_diagonal_is_zero() {
        let xs = vec![
            Vec3::new(0.0, 0.6, 0.8),
            Vec3::new(0.6, 0.0, 0.8),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let vs = vec![
            Vec3::new(0.2, -0.32, 0.24),
            Vec3::new(-0.4, 0.1, 0.3),
            Vec3::new(0.05, 0.1, 0.0),
        ];
        let e = Ensemble::new(xs, vs).unwrap();
        for i in 0..3 {
            let f = inhomogeneous_term(&e, i, i, &params(2.0)).unwrap();
            assert_eq!(f.f1, 0.0);
            assert_abs_diff_eq!(f.f2, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(f.f3, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn inhomogeneous_term_vanishes_on_flock() {
        let x = Vec3::new(0.0, 0.6, 0.8);
        let v = Vec3::new(0.3, 0.0, 0.0);
        let e = Ensemble::new(vec![x; 4], vec![v; 4]).unwrap();
        let f = inhomogeneous_term(&e, 0, 3, &params(1.0)).unwrap();
        assert_eq!(f.as_vec(), Vec3::zeros());
    }

    #[test]
    fn spectral_abscissa_branches() {
        assert_eq!(spectral_abscissa(2.0, 1.0), 2.0);
        assert_relative_eq!(spectral_abscissa(3.0, 2.0), 2.0, max_relative = 1e-15);
        // ψ₀ = 3(e² − 1), σ = 1; closed form in 40-digit arithmetic (mpmath).
        let k = paper_kernel();
        assert_relative_eq!(
            spectral_abscissa(k.psi0(), 1.0),
            0.104_630_676_696_706_72,
            max_relative = 1e-14
        );
    }

    #[test]
    fn spectral_abscissa_lower_bound() {
        for &(psi0, sigma) in &[(5.0, 1.0), (19.2, 1.0), (3.0, 2.0), (10.0, 0.01)] {
            let mu = spectral_abscissa(psi0, sigma);
            assert!(mu > 0.0);
            assert!(mu >= 2.0 * sigma / psi0);
        }
    }

    #[test]
    fn ensemble_validation() {
        assert!(Ensemble::new(vec![1.01 * e1()], vec![e2()]).is_err());
        assert!(Ensemble::new(vec![e1()], vec![e1()]).is_err());
        assert!(Ensemble::new(vec![e1()], vec![]).is_err());
        assert!(Ensemble::new(vec![], vec![]).is_err());
        assert!(Ensemble::from_raw(vec![1.01 * e1()], vec![e1()]).is_ok());
    }

    #[test]
    fn linear_kernel_is_accepted() {
        let k = KernelSpec::Linear { slope: 1.0 }.build().unwrap();
        let p = ModelParams::new(k, 1.0).unwrap();
        let e = Ensemble::new(vec![e1(), e2()], vec![e3(), -e3()]).unwrap();
        assert!(rhs(&e, &p).is_ok());
        assert!(ModelParams::new(paper_kernel(), -1.0).is_err());
    }
}
