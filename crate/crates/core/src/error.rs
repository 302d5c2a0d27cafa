use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquareMatrix { row: usize, len: usize, expected: usize },
    #[error("negative distance d({from},{to}) = {value}")]
    NegativeEntry { from: usize, to: usize, value: f64 },
    #[error("non-finite distance d({from},{to}) = {value}")]
    NonFiniteEntry { from: usize, to: usize, value: f64 },
    #[error("point label count {labels} does not match matrix size {size}")]
    LabelMismatch { labels: usize, size: usize },
    #[error("quasi-metric axioms violated: {0}")]
    InvalidQuasiMetric(String),
    #[error("unknown point index {index} (space has {len} points)")]
    UnknownPoint { index: usize, len: usize },
    #[error("potential too steep: (phi({to}) - phi({from})) / d({from},{to}) = {ratio} > 1")]
    PotentialTooSteep { from: usize, to: usize, ratio: f64 },
    #[error("carrier mismatch: expected {expected} values, got {got}")]
    CarrierMismatch { expected: usize, got: usize },
    #[error("convex weight {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("transform failed on sample {sample}: {reason}")]
    TransformFailure { sample: usize, reason: String },
    #[error("drift dual norm {norm} >= 1 at {point:?}")]
    DriftTooLarge { point: [f64; 2], norm: f64 },
    #[error("point {point:?} lies outside the domain")]
    DomainExit { point: [f64; 2] },
    #[error("target unreachable from source")]
    Unreachable,
    #[error("domain is unbounded; a bounded window is required")]
    UnboundedDomain,
    #[error("no mollifier width >= grid spacing {spacing} achieves sup error {eps}")]
    WidthUnderflow { spacing: f64, eps: f64 },
    #[error("unknown base point {index} (space has {len} points)")]
    UnknownBasePoint { index: usize, len: usize },
    #[error("map is not a bijection: {0}")]
    NotBijective(String),
    #[error("spaces have different sizes: {x} vs {y}")]
    SizeMismatch { x: usize, y: usize },
    #[error("exhaustive enumeration limited to {max} points, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("pushed-forward structure is not positive at {point:?} (value {value})")]
    InfeasibleDrift { point: [f64; 2], value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidScenario(e.to_string())
    }
}
