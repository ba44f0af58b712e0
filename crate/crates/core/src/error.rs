use thiserror::Error;

/// Errors raised by the library.
///
/// Computation flags that are not programming errors (budget exhaustion,
/// divergence) are kept distinct so the CLI can map them onto its exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },

    #[error("modulus must be positive")]
    ZeroModulus,

    #[error("zero polynomial has no top-degree part")]
    ZeroPolynomial,

    #[error("polynomial is not homogeneous")]
    NotHomogeneous,

    #[error("expected degree {expected}, got {got}")]
    WrongDegree { expected: usize, got: usize },

    #[error("substitution for x{var} refers to assigned variable x{refers}")]
    BadSubstitution { var: usize, refers: usize },

    #[error("gcd({m}, {q}) != 1")]
    NotCoprime { m: u64, q: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded: {needed} > {budget} evaluations")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("arcs overlap between {left} and {right}; N too small for this C")]
    ArcsOverlap { left: String, right: String },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("polynomial is not separable across split {split}")]
    NotSeparable { split: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("could not factor {0} by trial division")]
    Factorization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
