use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("topology mismatch: x axis is {x:?}, y axis is {y:?}")]
    TopologyMismatch {
        x: crate::grid::Topology,
        y: crate::grid::Topology,
    },

    #[error("zero mesh width in Shortley-Weller stencil")]
    ZeroMeshWidth,

    #[error("field function is singular at z = ({re}, {im})")]
    SingularField { re: f64, im: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ECS angle {theta} outside the supported range {range}")]
    UnsupportedAngle { theta: f64, range: &'static str },

    #[error("pole of the linear fractional map at mu = ({re}, {im})")]
    Pole { re: f64, im: f64 },

    #[error("eigenvalue condition has a pole at lambda = ({re}, {im})")]
    ConditionPole { re: f64, im: f64 },

    #[error("zero pivot at row {row} on level {level}")]
    ZeroPivot { level: usize, row: usize },

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("QR iteration did not converge after {0} sweeps")]
    QrNoConvergence(usize),

    #[error("matrix of dimension {0} exceeds the dense oracle limit")]
    OracleTooLarge(usize),

    #[error("grid size {0} is not of the form L*2^p with L in {{1,3,5,7}} and coarsenable to <= 8")]
    UncoarsenableSize(usize),

    #[error("cannot parse cycle spec {0:?}")]
    CycleSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shift selection: start value does not converge (conv factor {conv_factor:.3})")]
    StartDoesNotConverge { conv_factor: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
