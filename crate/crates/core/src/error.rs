use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KikError {
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NonHermitianInput(f64),
    #[error("negative rate {0}")]
    NegativeRate(f64),
    #[error("invalid Pauli string `{0}`")]
    InvalidPauliString(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),
    #[error("Pauli transfer matrix is singular or ill-conditioned (cond {0:.3e})")]
    SingularPTM(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("matrix exponential failed: {0}")]
    ExponentialDidNotConverge(String),
    #[error("quadrature did not converge (last change {0:.3e})")]
    QuadratureNotConverged(f64),
    #[error("eigenvalue {re}+{im}i lies on or beyond the principal branch cut")]
    BranchCutViolation { re: f64, im: f64 },
    #[error("invalid input: {0}")]
    InvalidSpec(String),
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("g = {0} is outside the admissible range")]
    OutOfRangeG(f64),
    #[error("linear system is ill-conditioned (cond {0:.3e})")]
    IllConditionedSystem(f64),
    #[error("shot budget {budget} too small for {needed} circuits")]
    BudgetTooSmall { budget: u64, needed: u64 },
    #[error("measurement matrix is singular or ill-conditioned (cond {0:.3e})")]
    SingularMeasurementMatrix(f64),
    #[error("logical unitary of the block is not supported for randomized compiling")]
    UnsupportedLogicalUnitary,
    #[error("regression is degenerate: {0}")]
    RegressionDegenerate(String),
    #[error("value {0} is out of range")]
    OutOfRange(f64),
}

impl KikError {
    /// Errors caused by bad user input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            KikError::InvalidSpec(_)
                | KikError::InvalidPauliString(_)
                | KikError::NegativeRate(_)
                | KikError::OutOfRangeG(_)
                | KikError::OrderTooLarge { .. }
                | KikError::DimensionMismatch { .. }
                | KikError::NotQubitDimension(_)
                | KikError::BudgetTooSmall { .. }
                | KikError::OutOfRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, KikError>;
