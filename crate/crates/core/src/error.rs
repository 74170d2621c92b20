use thiserror::Error;

/// Errors raised by the geometry, Haar and operator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("level {level} outside the window [{min}, {max}]")]
    LevelOutOfWindow { level: i64, min: i32, max: i32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported: 1..=3)")]
    UnsupportedDimension(usize),

    #[error("invalid signature {eta:#b} for dimension {dim}")]
    InvalidSignature { eta: u8, dim: usize },

    #[error("set contains a cube finer than level {max_level}")]
    TooFine { max_level: i32 },

    #[error("mesh level {mesh} cannot resolve level {needed}")]
    MeshTooCoarse { mesh: i32, needed: i32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("kernel evaluated on the diagonal x = y")]
    Diagonal,

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("degenerate (zero) kernel cannot be normalised")]
    DegenerateKernel,

    #[error("adaptive quadrature hit depth cap {depth} (estimate {value:e}, error {error:e})")]
    QuadratureDepth { depth: u32, value: f64, error: f64 },

    #[error("evaluation point lies on the closed support (distance {distance:e})")]
    OnSupport { distance: f64 },

    #[error("integration box too small: {0}")]
    BoxTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
