//! Communication-rate functions ψ on the distance range `[0, 2]`.
//!
//! Admissible kernels are nonnegative, strictly decreasing, `C¹` on `[0, 2]`
//! and vanish at distance 2 (the diameter of the unit sphere).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest distance on the unit sphere.
pub const MAX_DISTANCE: f64 = 2.0;

const RANGE_SLACK: f64 = 1e-12;
const C1_GRID_POINTS: usize = 100_000;
const C1_SAFETY: f64 = 1.01;

/// Kernel selection as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `a (exp(2 − r) − 1)`; `a = 3` is the reference kernel.
    Exponential { amplitude: f64 },
    /// `c (2 − r)`.
    Linear { slope: f64 },
    /// `c (2 − r)²`.
    Quadratic { scale: f64 },
    /// `ψ ≡ c`. Not admissible; for exploratory runs only.
    Constant { value: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Exponential { amplitude: 3.0 }
    }
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        let (param, label) = match *self {
            KernelSpec::Exponential { amplitude } => (amplitude, "amplitude"),
            KernelSpec::Linear { slope } => (slope, "slope"),
            KernelSpec::Quadratic { scale } => (scale, "scale"),
            KernelSpec::Constant { value } => (value, "value"),
        };
        if !(param.is_finite() && param >= 0.0) {
            return Err(Error::Config(format!(
                "kernel {label} must be finite and nonnegative, got {param}"
            )));
        }
        Ok(Kernel::from_profile(Profile::Builtin(self.clone())))
    }
}

type RateFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Profile {
    Builtin(KernelSpec),
    Custom {
        name: String,
        psi: Arc<RateFn>,
        dpsi: Arc<RateFn>,
    },
}

/// An immutable communication-rate function with cached `ψ(0)` and `‖ψ‖_{C¹}`.
#[derive(Clone)]
pub struct Kernel {
    profile: Profile,
    psi0: f64,
    c1_norm: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name())
            .field("psi0", &self.psi0)
            .field("c1_norm", &self.c1_norm)
            .finish()
    }
}

/// The reference kernel `ψ(r) = 3 (exp(2 − r) − 1)`.
pub fn paper_kernel() -> Kernel {
    Kernel::from_profile(Profile::Builtin(KernelSpec::default()))
}

impl Kernel {
    /// Kernel from an arbitrary rate and its derivative. `‖ψ‖_{C¹}` is
    /// estimated on a dense grid and inflated by 1% so it stays an upper bound.
    pub fn custom<F, G>(name: impl Into<String>, psi: F, dpsi: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_profile(Profile::Custom {
            name: name.into(),
            psi: Arc::new(psi),
            dpsi: Arc::new(dpsi),
        })
    }

    fn from_profile(profile: Profile) -> Self {
        let mut k = Kernel {
            profile,
            psi0: 0.0,
            c1_norm: 0.0,
        };
        k.psi0 = k.rate(0.0);
        k.c1_norm = match &k.profile {
            Profile::Builtin(spec) => match *spec {
                // |ψ| + |ψ'| peaks at r = 0 for every builtin profile.
                KernelSpec::Exponential { amplitude } => {
                    amplitude * (2.0 * std::f64::consts::E.powi(2) - 1.0)
                }
                KernelSpec::Linear { slope } => 3.0 * slope,
                KernelSpec::Quadratic { scale } => 8.0 * scale,
                KernelSpec::Constant { value } => value,
            },
            Profile::Custom { .. } => C1_SAFETY * k.grid_c1_norm(C1_GRID_POINTS),
        };
        k
    }

    pub fn name(&self) -> &str {
        match &self.profile {
            Profile::Builtin(KernelSpec::Exponential { .. }) => "exponential",
            Profile::Builtin(KernelSpec::Linear { .. }) => "linear",
            Profile::Builtin(KernelSpec::Quadratic { .. }) => "quadratic",
            Profile::Builtin(KernelSpec::Constant { .. }) => "constant",
            Profile::Custom { name, .. } => name,
        }
    }

    /// The configuration entry this kernel was built from, if any.
    pub fn spec(&self) -> Option<&KernelSpec> {
        match &self.profile {
            Profile::Builtin(spec) => Some(spec),
            Profile::Custom { .. } => None,
        }
    }

    pub fn psi0(&self) -> f64 {
        self.psi0
    }

    pub fn c1_norm(&self) -> f64 {
        self.c1_norm
    }

    /// `ψ(r)` with the domain checked.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(0.0..=MAX_DISTANCE + RANGE_SLACK).contains(&r) {
            return Err(Error::OutOfRange(r));
        }
        Ok(self.rate(r))
    }

    /// `ψ(r)` with `r` clamped into `[0, 2]`. Hot-path variant of [`Kernel::eval`].
    #[inline]
    pub fn rate(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, MAX_DISTANCE);
        match &self.profile {
            Profile::Builtin(spec) => match *spec {
                KernelSpec::Exponential { amplitude } => amplitude * ((2.0 - r).exp() - 1.0),
                KernelSpec::Linear { slope } => slope * (2.0 - r),
                KernelSpec::Quadratic { scale } => scale * (2.0 - r) * (2.0 - r),
                KernelSpec::Constant { value } => value,
            },
            Profile::Custom { psi, .. } => psi(r),
        }
    }

    /// `ψ'(r)` with `r` clamped into `[0, 2]`.
    pub fn derivative(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, MAX_DISTANCE);
        match &self.profile {
            Profile::Builtin(spec) => match *spec {
                KernelSpec::Exponential { amplitude } => -amplitude * (2.0 - r).exp(),
                KernelSpec::Linear { slope } => -slope,
                KernelSpec::Quadratic { scale } => -2.0 * scale * (2.0 - r),
                KernelSpec::Constant { .. } => 0.0,
            },
            Profile::Custom { dpsi, .. } => dpsi(r),
        }
    }

    fn grid_c1_norm(&self, points: usize) -> f64 {
        grid(points)
            .map(|r| self.rate(r).abs() + self.derivative(r).abs())
            .fold(0.0, f64::max)
    }
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    let h = MAX_DISTANCE / (points - 1) as f64;
    (0..points).map(move |i| {
        if i + 1 == points {
            MAX_DISTANCE
        } else {
            i as f64 * h
        }
    })
}

/// `ψ(r)`; errors outside `[0, 2]`.
pub fn eval_psi(k: &Kernel, r: f64) -> Result<f64> {
    k.eval(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub grid_points: usize,
    /// `|ψ(2)| ≤ 1e−10`.
    pub zero_at_two: bool,
    pub strictly_decreasing: bool,
    pub nonnegative: bool,
    /// Centered differences agree with the supplied derivative and stay under `‖ψ‖_{C¹}`.
    pub derivative_consistent: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.zero_at_two
            && self.strictly_decreasing
            && self.nonnegative
            && self.derivative_consistent
    }
}

/// Grid checks of nonnegativity, strict decrease, `ψ(2) = 0` and
/// derivative consistency. Failures are reported, never raised.
pub fn validate_kernel(k: &Kernel, grid_points: usize) -> ValidationReport {
    let grid_points = grid_points.max(2);
    let mut failures = Vec::new();

    let at_two = k.rate(MAX_DISTANCE);
    let zero_at_two = at_two.abs() <= 1e-10;
    if !zero_at_two {
        failures.push(format!("ψ(2)=0 violated: ψ(2) = {at_two}"));
    }

    let values: Vec<(f64, f64)> = grid(grid_points).map(|r| (r, k.rate(r))).collect();

    let nonnegative = values.iter().all(|&(_, p)| p >= 0.0 && p.is_finite());
    if !nonnegative {
        failures.push("ψ takes negative or non-finite values".to_string());
    }

    let strictly_decreasing = values.windows(2).all(|w| w[1].1 < w[0].1);
    if !strictly_decreasing {
        let (r, _) = values
            .windows(2)
            .find(|w| w[1].1 >= w[0].1)
            .map(|w| w[0])
            .unwrap_or((f64::NAN, f64::NAN));
        failures.push(format!("strict decrease violated near r = {r}"));
    }

    const H: f64 = 1e-5;
    let mut derivative_consistent = true;
    for &(r, p) in &values {
        let lo = (r - H).max(0.0);
        let hi = (r + H).min(MAX_DISTANCE);
        let fd = (k.rate(hi) - k.rate(lo)) / (hi - lo);
        let d = k.derivative(r);
        let scale = d.abs().max(1.0);
        let one_sided = lo == 0.0 || hi == MAX_DISTANCE;
        let tol = if one_sided { 1e-3 } else { 1e-5 } * scale;
        if !(fd.is_finite() && d.is_finite()) || (fd - d).abs() > tol {
            derivative_consistent = false;
            failures.push(format!("derivative mismatch at r = {r}: fd {fd}, ψ' {d}"));
            break;
        }
        if p.abs() + d.abs() > k.c1_norm() * (1.0 + 1e-12) {
            derivative_consistent = false;
            failures.push(format!(
                "|ψ|+|ψ'| = {} at r = {r} exceeds ‖ψ‖_C¹ = {}",
                p.abs() + d.abs(),
                k.c1_norm()
            ));
            break;
        }
    }

    ValidationReport {
        grid_points,
        zero_at_two,
        strictly_decreasing,
        nonnegative,
        derivative_consistent,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn paper_kernel_values() {
        let k = paper_kernel();
        assert_eq!(k.eval(2.0).unwrap(), 0.0);
        assert_relative_eq!(
            k.eval(0.0).unwrap(),
            3.0 * (E * E - 1.0),
            max_relative = 1e-15
        );
        assert_relative_eq!(k.eval(1.0).unwrap(), 3.0 * (E - 1.0), max_relative = 1e-15);
        // 3(e² − 1) to 12 digits (mpmath).
        assert_relative_eq!(k.psi0(), 19.1671682967920, max_relative = 1e-13);
        // 6e² − 3 (mpmath).
        assert_relative_eq!(k.c1_norm(), 41.3343365935839, max_relative = 1e-13);
    }

    #[test]
    fn paper_kernel_derivative_is_negative() {
        let k = paper_kernel();
        for i in 0..=200 {
            let r = i as f64 / 100.0;
            assert!(k.derivative(r) < 0.0);
            assert_relative_eq!(
                k.derivative(r),
                -3.0 * (2.0 - r).exp(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn paper_c1_norm_matches_grid_maximum() {
        let k = paper_kernel();
        let grid_max = k.grid_c1_norm(100_000);
        assert_relative_eq!(grid_max, 6.0 * E * E - 3.0, max_relative = 1e-12);
    }

    #[test]
    fn domain_is_enforced() {
        let k = paper_kernel();
        assert!(matches!(k.eval(-1e-3), Err(Error::OutOfRange(_))));
        assert!(matches!(k.eval(2.0 + 1e-9), Err(Error::OutOfRange(_))));
        assert!(k.eval(2.0 + 1e-13).is_ok());
    }

    #[test]
    fn validation_of_builtins() {
        assert!(validate_kernel(&paper_kernel(), 1000).passed());
        assert!(validate_kernel(&paper_kernel(), 10_000).passed());
        for spec in [
            KernelSpec::Linear { slope: 1.0 },
            KernelSpec::Quadratic { scale: 2.5 },
            KernelSpec::Exponential { amplitude: 0.5 },
        ] {
            let report = validate_kernel(&spec.build().unwrap(), 10_000);
            assert!(report.passed(), "{spec:?}: {:?}", report.failures);
        }
    }

    #[test]
    fn constant_kernel_fails_validation() {
        let k = KernelSpec::Constant { value: 1.0 }.build().unwrap();
        let report = validate_kernel(&k, 1000);
        assert!(!report.zero_at_two);
        assert!(!report.strictly_decreasing);
        assert!(report.nonnegative);
        assert!(!report.passed());
    }

    #[test]
    fn linear_kernel_constants() {
        let k = KernelSpec::Linear { slope: 1.0 }.build().unwrap();
        assert_eq!(k.psi0(), 2.0);
        assert_eq!(k.c1_norm(), 3.0);
        assert!(validate_kernel(&k, 1000).passed());
    }

    #[test]
    fn custom_kernel_inflates_grid_norm() {
        let k = Kernel::custom("two-minus-r", |r| 2.0 - r, |_| -1.0);
        assert_eq!(k.psi0(), 2.0);
        assert_relative_eq!(k.c1_norm(), 3.0 * 1.01, max_relative = 1e-14);
        assert!(validate_kernel(&k, 1000).passed());
        assert_eq!(k.name(), "two-minus-r");
    }

    #[test]
    fn evaluation_is_deterministic() {
        let k = paper_kernel();
        for i in 0..100 {
            let r = 0.0201 * i as f64;
            assert_eq!(k.rate(r).to_bits(), k.rate(r).to_bits());
        }
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(KernelSpec::Linear { slope: -1.0 }.build().is_err());
        assert!(KernelSpec::Exponential {
            amplitude: f64::NAN
        }
        .build()
        .is_err());
    }
}
