//! Crate-wide error type.

/// Errors raised by the numerical kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("potential is singular at the origin: |x| = {radius:.3e} < {min_radius:.3e}")]
    SingularPoint { radius: f64, min_radius: f64 },

    #[error("invalid angular profile: {0}")]
    InvalidProfile(String),

    #[error("expected a unit vector, got |y| = {0:.12}")]
    NotUnitVector(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid too large: needs ~{needed_bytes} bytes, cap is {cap_bytes}")]
    GridTooLarge { needed_bytes: u64, cap_bytes: u64 },

    #[error("eigensolver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("bracket [{lo}, {hi}] does not isolate the ground state: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("characteristic integration failed: {0}")]
    IntegrationFailure(String),

    #[error("direction not reachable by any integrated flow: {0}")]
    UnreachableDirection(String),

    #[error("time {t} outside recorded range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("time {t} not on the recorded mesh (nearest recorded time {nearest})")]
    OffMesh { t: f64, nearest: f64 },

    #[error("insufficient sample: {got} paths, need at least {need}")]
    InsufficientSample { got: usize, need: usize },

    #[error("invalid discrete path: {0}")]
    InvalidPath(String),

    #[error("rate fit failed: {0}")]
    FitFailure(String),

    #[error("point outside spectral grid: {0}")]
    OutOfGrid(String),

    #[error("overlapping classification neighborhoods: {0}")]
    OverlappingNeighborhoods(String),
}

pub type Result<T> = std::result::Result<T, Error>;
