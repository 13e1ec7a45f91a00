use thiserror::Error;

use crate::integrator::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two points closer to antipodal than the rotation operator tolerates.
    #[error("antipodal configuration: ‖z1 + z2‖ = {margin:e}")]
    AntipodalPair { margin: f64 },

    #[error("vector is not tangent at its base point: |⟨v, x⟩| = {inner:e}")]
    NotTangent { inner: f64 },

    #[error("vector is not unit length: |‖z‖ − 1| = {deviation:e}")]
    NotUnit { deviation: f64 },

    #[error("cannot normalise the zero vector")]
    ZeroVector,

    #[error("distance {0} outside the kernel domain [0, 2]")]
    OutOfRange(f64),

    #[error("series value {value} at t = {t} is not positive")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("no root of the X_M fixed-point equation: {0}")]
    NoRoot(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The integrator hit the antipodal set. Carries everything recorded so far.
    #[error("antipodal abort at t = {time}")]
    AntipodalAbort { time: f64, partial: Box<Trajectory> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_antipodal(&self) -> bool {
        matches!(
            self,
            Error::AntipodalPair { .. } | Error::AntipodalAbort { .. }
        )
    }
}
