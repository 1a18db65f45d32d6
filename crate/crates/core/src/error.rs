use thiserror::Error;

/// Errors raised by problem construction, meshing, sampling and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("decay exponent p must exceed 1/2, got {0}")]
    InvalidExponent(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("diffusion coordinate {index} exceeds the coordinate cap {cap}")]
    CoordinateCap { index: usize, cap: usize },

    #[error("tail bound did not reach relative tolerance {rel_tol:e} within {terms} terms")]
    TailNotConverged { rel_tol: f64, terms: u64 },

    #[error("adaptive mesh did not reach the horizon within {cap} steps")]
    MeshIterationCap { cap: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: f64, right: f64 },

    #[error("node {node} of the coarse mesh is not a node of the fine mesh")]
    NodeContainment { node: f64 },

    #[error("increment blocks cover {blocks} intervals but the mesh has {intervals}")]
    Misaligned { blocks: usize, intervals: usize },

    #[error("increment blocks carry {available} coordinates, {required} required")]
    CoordinateShortfall { required: usize, available: usize },

    #[error("time {t} lies outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("full diffusion norm is not available for this problem")]
    MissingFullNorm,

    #[error("Richardson-Simpson integration did not converge to {rel_tol:e} after {doublings} doublings")]
    QuadratureNotConverged { rel_tol: f64, doublings: u32 },
}

impl SdeError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SdeError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SdeError>;
