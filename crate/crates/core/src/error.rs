use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("grid with {points} points per axis is too small for an order-{order} stencil")]
    GridTooSmall { points: usize, order: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("time derivative of order {needed} required but only {available} available")]
    MissingTimeDerivative { needed: usize, available: usize },

    #[error("word constraint violated: {0}")]
    WordConstraint(String),

    #[error("cannot parse operator word: {0}")]
    WordParse(String),

    #[error("pointwise system near-singular at grid point {point} (condition estimate {condition:.3e})")]
    SingularPointMatrix { point: usize, condition: f64 },

    #[error("blow-up guard tripped at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("data support radius {support} exceeds usable grid radius {limit}")]
    SupportExceedsGrid { support: f64, limit: f64 },

    #[error("smallness violated: max {value:.3e} exceeds threshold {threshold:.3e}")]
    SmallnessViolated { value: f64, threshold: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("malformed field file: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
