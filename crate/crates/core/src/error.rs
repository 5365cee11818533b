use thiserror::Error;

/// Every failure the library reports. Variants carry the offending magnitude
/// where there is one, so callers can print a useful diagnostic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace:.12} (expected 1)")]
    NotUnitTrace { trace: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.6e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("effect has eigenvalue {max_eigenvalue:.6e} above 1")]
    EffectTooLarge { max_eigenvalue: f64 },
    #[error("wrong dimension: expected {expected}, found {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Bloch vector has norm {norm:.12} > 1")]
    VectorTooLong { norm: f64 },
    #[error("negative weight {weight}")]
    NegativeWeight { weight: f64 },
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("states do not commute: max |[rho1, rho2]| = {commutator_norm:.3e}")]
    NotCommuting { commutator_norm: f64 },
    #[error("prior has zero mean")]
    ZeroMeanPrior,
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("operation requires the uniform prior")]
    NonUniformPrior,
    #[error("prior is a point mass; there is nothing to estimate")]
    DegeneratePrior,
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("effect is already pure (rank one)")]
    AlreadyPure,
    #[error("Q(alpha) denominator vanishes: outcome never occurs under rho_b")]
    SingularDenominator,
    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),
    #[error("joint support has rank {rank} > 2")]
    SupportTooLarge { rank: usize },
    #[error("basis alignment failed: {0}")]
    BasisAlignmentFailed(String),
    #[error("decay rate {rate} outside [0, {max}]")]
    RateOutOfRange { rate: f64, max: f64 },
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("no reduction applies: {0}")]
    UnsolvedCase(String),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsolvedCase(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
