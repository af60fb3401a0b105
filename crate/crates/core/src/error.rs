use alloc::string::String;

/// Failures raised by the kernels.
///
/// Variants carry enough context to name the failing gate; none of them are
/// recoverable inside the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("nearest boundary point is not unique near ({x}, {y})")]
    AmbiguousProjection { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the boundary (signed distance {distance:e})")]
    NotOnBoundary { x: f64, y: f64, distance: f64 },
    #[error("measure support is not strictly inside the domain: {0}")]
    UnsupportedDomain(String),
    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },
    #[error("step h = {h} exceeds horizon T = {horizon}")]
    StepTooLarge { h: f64, horizon: f64 },
    #[error("c(t) grid spacing {spacing} is coarser than 1000 steps of h = {h}")]
    GridTooCoarse { spacing: f64, h: f64 },
    #[error("found {found} of {wanted} eigenvalues below the scan ceiling {ceiling}")]
    RootBracketingFailed { found: usize, wanted: usize, ceiling: f64 },
    #[error("t = {t} is beyond the solution horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("Laplace transform tail at z = {z} is {ratio:e} of the transform")]
    TailNotResolved { z: f64, ratio: f64 },
    #[error("({x}, {y}) is outside the domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("suite member {index} violates the boundary condition (residual {residual:e})")]
    SuiteMemberNotInDomain { index: usize, residual: f64 },
    #[error("only {reached} of {total} paths reached local time level {level}")]
    InsufficientLevel { reached: usize, total: usize, level: f64 },
    #[error("spectral energy fraction {fraction:e} above 0.9 Nyquist")]
    AliasingDetected { fraction: f64 },
    #[error("{censored} of {total} paths censored at T = {horizon}")]
    CensoringDominates { censored: usize, total: usize, horizon: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
