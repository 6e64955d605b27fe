use thiserror::Error;

/// Domain errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonPositiveEpsilon: epsilon must be > 0, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("NonPositiveLength: domain length must be > 0, got {0}")]
    NonPositiveLength(f64),
    #[error(
        "CriticalLength: L = {length} is within {tol} of the critical length \
         {nearest} (k = {k}, l = {l}, distance = {distance:e})"
    )]
    CriticalLength {
        length: f64,
        tol: f64,
        nearest: f64,
        k: u32,
        l: u32,
        distance: f64,
    },
    #[error("SingularProfile: sin(L/2) vanishes near L = {0}; M and f are singular there")]
    SingularProfile(f64),
    #[error("GridTooCoarse: n = {0}, the spatial stencils need n >= 8")]
    GridTooCoarse(usize),
    #[error("SolveFailure: singular step matrix (check dt and parameters)")]
    SolveFailure,
    #[error("ZeroB: b must be nonzero for this subsystem")]
    ZeroB,
    #[error("NonNegativeB: b must be negative, got {0}")]
    NonNegativeB(f64),
    #[error("DimensionCap: matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("EigenFailure: Schur iteration did not converge")]
    EigenFailure,
    #[error("NonPositiveValues: decay fit needs strictly positive values after the transient")]
    NonPositiveValues,
    #[error("ZeroLambda: the registry must carry lambda > 0 for this predicate")]
    ZeroLambda,
    #[error("DenseSnapshotsRequired: the ISS monitor needs a snapshot at every sample")]
    DenseSnapshotsRequired,
    #[error("PredicateViolated: {0}")]
    PredicateViolated(&'static str),
    #[error("Config: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable name of the error kind, used by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonPositiveEpsilon(_) => "NonPositiveEpsilon",
            Error::NonPositiveLength(_) => "NonPositiveLength",
            Error::CriticalLength { .. } => "CriticalLength",
            Error::SingularProfile(_) => "SingularProfile",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::SolveFailure => "SolveFailure",
            Error::ZeroB => "ZeroB",
            Error::NonNegativeB(_) => "NonNegativeB",
            Error::DimensionCap { .. } => "DimensionCap",
            Error::EigenFailure => "EigenFailure",
            Error::NonPositiveValues => "NonPositiveValues",
            Error::ZeroLambda => "ZeroLambda",
            Error::DenseSnapshotsRequired => "DenseSnapshotsRequired",
            Error::PredicateViolated(_) => "PredicateViolated",
            Error::Config(_) => "Config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
