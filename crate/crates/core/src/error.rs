use thiserror::Error;

/// Failure modes shared by every layer of the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A matrix violates a structural invariant (Hermiticity, unitarity, shape).
    #[error("structural error: {0}")]
    Structural(String),
    /// Input outside the domain of an operation (empty, mismatched sizes, bad ranges).
    #[error("domain error: {0}")]
    Domain(String),
    /// The multiplicity of a tracked level changed along the curve.
    #[error("level crossing: {0}")]
    LevelCrossing(String),
    /// A grid is too coarse for the requested operation.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// The endpoint overlap vanishes, so the noncyclic phase angle is meaningless.
    #[error("undefined phase: visibility {visibility:e} is at or below the floor {floor:e}")]
    UndefinedPhase { visibility: f64, floor: f64 },
    /// The field points along the symmetry axis, where the quadrupole eigenframe is singular.
    #[error("axis singularity: {0}")]
    AxisSingularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
