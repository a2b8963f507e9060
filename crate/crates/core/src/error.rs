use thiserror::Error;

/// Every failure mode surfaced by the library.
///
/// The variant name doubles as the machine-readable error kind emitted by the
/// CLI, so renaming a variant is an interface change.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{a} is not invertible modulo {modulus}")]
    NotInvertible { a: i64, modulus: u64 },

    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),

    #[error("certified tail {tail:e} exceeds target {target:e} at c_max = {c_max}")]
    BudgetExceeded { tail: f64, target: f64, c_max: u64 },

    #[error("quadrature did not reach tolerance (estimated error {estimate:e})")]
    QuadratureFailure { estimate: f64 },

    #[error("need {needed} coefficients, only {available} available")]
    InsufficientCoefficients { needed: usize, available: usize },

    #[error("gcd({disc}, {level}) > 1")]
    CoprimalityViolation { disc: i64, level: u64 },

    #[error("Atkin-Lehner sign undecidable: {0}")]
    Undecidable(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid eigenvalue spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Stable identifier for serialized error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotInvertible { .. } => "NotInvertible",
            Error::NotFundamental(_) => "NotFundamental",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::InsufficientCoefficients { .. } => "InsufficientCoefficients",
            Error::CoprimalityViolation { .. } => "CoprimalityViolation",
            Error::Undecidable(_) => "Undecidable",
            Error::InvalidQuery(_) => "InvalidQuery",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
