//! Rotation operator on the unit sphere and sphere/tangent projections.
//!
//! For `z1, z2 ∈ S²` with `z1 ≠ ±z2` the rotation carrying `z1` to `z2`
//! along their great circle is
//!
//! ```text
//!   R(z1, z2) = ⟨z1,z2⟩ I + z2 z1ᵀ − z1 z2ᵀ + (1 − ⟨z1,z2⟩) n nᵀ,
//!   n = (z1 × z2) / |z1 × z2|
//! ```
//!
//! `R` is orthogonal, fixes `n`, sends `z1` to `z2`, and restricted to
//! `T_{z1}S²` it is parallel transport into `T_{z2}S²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Below this value of `‖z1 + z2‖` the rotation operator is singular.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-8;
/// At or below this value of `‖z1 − z2‖` the rotation is the identity.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

const UNIT_TOLERANCE: f64 = 1e-12;
const TANGENT_TOLERANCE: f64 = 1e-10;
const TRANSPORT_TANGENT_TOLERANCE: f64 = 1e-8;

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector(Vec3);

impl UnitVector {
    pub fn new(z: Vec3) -> Result<Self> {
        let deviation = (z.norm() - 1.0).abs();
        if deviation > UNIT_TOLERANCE || !deviation.is_finite() {
            return Err(Error::NotUnit { deviation });
        }
        Ok(Self(z))
    }

    pub fn e1() -> Self {
        Self(Vec3::x())
    }

    pub fn e2() -> Self {
        Self(Vec3::y())
    }

    pub fn e3() -> Self {
        Self(Vec3::z())
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;

    fn try_from(a: [f64; 3]) -> Result<Self> {
        Self::new(Vec3::from(a))
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> Self {
        u.0.into()
    }
}

/// A vector in the tangent plane `T_base S²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: UnitVector,
    v: Vec3,
}

impl TangentVector {
    pub fn new(base: UnitVector, v: Vec3) -> Result<Self> {
        let inner = v.dot(base.as_vec()).abs();
        if inner > TANGENT_TOLERANCE || !inner.is_finite() {
            return Err(Error::NotTangent { inner });
        }
        Ok(Self { base, v })
    }

    pub fn zero(base: UnitVector) -> Self {
        Self {
            base,
            v: Vec3::zeros(),
        }
    }

    pub fn base(&self) -> &UnitVector {
        &self.base
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }
}

/// An orthogonal 3×3 matrix produced by [`rotation_matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn as_matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// `‖RᵀR − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).amax()
    }
}

/// Rotation carrying `z1` to `z2` along the great circle through both.
pub fn rotation_matrix(z1: &UnitVector, z2: &UnitVector) -> Result<RotationMatrix> {
    rotation_raw(z1.as_vec(), z2.as_vec()).map(RotationMatrix)
}

/// Rotation formula evaluated on raw vectors.
///
/// Used on intermediate integrator stages whose points sit a rounding
/// distance off the sphere; the formula is applied as written.
pub fn rotation_raw(z1: &Vec3, z2: &Vec3) -> Result<Mat3> {
    let margin = (z1 + z2).norm();
    if margin <= ANTIPODAL_TOLERANCE || !margin.is_finite() {
        return Err(Error::AntipodalPair { margin });
    }
    if (z1 - z2).norm() <= COINCIDENCE_TOLERANCE {
        return Ok(Mat3::identity());
    }
    let c = z1.dot(z2);
    let mut r = Mat3::identity() * c + z2 * z1.transpose() - z1 * z2.transpose();
    let w = z1.cross(z2);
    let w_norm = w.norm();
    if w_norm > 0.0 {
        let n = w / w_norm;
        r += (1.0 - c) * (n * n.transpose());
    }
    Ok(r)
}

/// Parallel transport of a tangent vector at `z1` to the tangent plane at `z2`.
pub fn transport(z1: &UnitVector, z2: &UnitVector, v: &Vec3) -> Result<TangentVector> {
    let inner = v.dot(z1.as_vec()).abs();
    if inner > TRANSPORT_TANGENT_TOLERANCE || !inner.is_finite() {
        return Err(Error::NotTangent { inner });
    }
    let r = rotation_matrix(z1, z2)?;
    Ok(TangentVector {
        base: *z2,
        v: r.apply(v),
    })
}

pub fn project_to_sphere(x: &Vec3) -> Result<UnitVector> {
    let norm = x.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(UnitVector(x / norm))
}

/// Removes the normal component: `v − ⟨v, x⟩ x`.
pub fn project_to_tangent(x: &UnitVector, v: &Vec3) -> TangentVector {
    let z = x.as_vec();
    TangentVector {
        base: *x,
        v: v - z * v.dot(z),
    }
}
