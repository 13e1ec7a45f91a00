//! Cucker–Smale type flocking on the unit sphere with an inter-particle
//! bonding force.
//!
//! Agents live on the unit sphere `S² ⊂ R³` with tangent velocities:
//!
//! ```text
//!   ẋ_i = v_i
//!   v̇_i = −(‖v_i‖²/‖x_i‖²) x_i + Σ_k (ψ_ik/N)(R_{x_k→x_i} v_k − v_i)
//!                             + Σ_k (σ/N)(x_k − ⟨x_i, x_k⟩ x_i)
//! ```
//!
//! where `R_{x_k→x_i}` is the rotation matrix carrying `x_k` to `x_i` along
//! the great circle through both points (parallel transport on the sphere).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] — rotation operator and sphere/tangent projections.
//! * [`kernel`] — communication-rate functions ψ.
//! * [`dynamics`] — model right-hand side, Lagrange multiplier, and the
//!   pair functional `X^{ij}` with its linear system `dX/dt = AX + F`.
//! * [`integrator`] — fixed-step RK4 with constraint projection.
//! * [`diagnostics`] — energy, diameters, flocking metrics, decay-rate fits.
//! * [`admissibility`] — decay constants and the initial-data condition.
//! * [`scenario`], [`config`], [`output`] — scenario construction and file IO.
//! * [`verify`] — the invariant suite behind `sphereflock verify`.

pub mod admissibility;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod kernel;
pub mod output;
pub mod scenario;
pub mod verify;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};

/// Plain 3-vector used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Plain 3×3 matrix used throughout the crate.
pub type Mat3 = nalgebra::Matrix3<f64>;
