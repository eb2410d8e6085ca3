use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {modulus} = {base}^{exponent} is a prime power; extension fields are not supported")]
    ExtensionFieldUnsupported { modulus: u64, base: u64, exponent: u32 },
    #[error("modulus {0} exceeds 2^31")]
    ModulusTooLarge(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("directions are linearly dependent")]
    DependentDirections,
    #[error("monomial of total degree {degree} exceeds declared bound {bound}")]
    DegreeViolation { degree: u32, bound: u32 },
    #[error("no polynomial of degree <= {0} is consistent with the samples")]
    NoConsistentPolynomial(u32),
    #[error("samples do not determine a unique polynomial (rank {rank} < {unknowns})")]
    Underdetermined { rank: usize, unknowns: usize },
    #[error("enumeration of {size} points exceeds the guard {limit}")]
    DomainTooLarge { size: u128, limit: u128 },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("state coefficient matrix is not symmetric (max deviation {0:e})")]
    NotPermutationInvariant(f64),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("operators sum exceeds identity (max eigenvalue {0})")]
    SumExceedsIdentity(f64),
    #[error("operators do not sum to identity (deviation {0:e})")]
    NotAMeasurement(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("restricted state has zero norm (norm^2 = {0:e})")]
    ZeroNormResidual(f64),
    #[error("state lacks support: {0}")]
    SupportDeficient(String),
    #[error("solver exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("ill-conditioned instance: {0}")]
    IllConditioned(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("sub-measurement is not {required:.3e}-consistent (measured {measured:.3e})")]
    ConsistencyPrecondition { required: f64, measured: f64 },
    #[error("self-improvement did not settle within {0} outer iterations")]
    Divergence(usize),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("strategy does not cover question {0}")]
    CoverageGap(String),
    #[error("search space {size} exceeds the guard {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("malformed query test: {0}")]
    MalformedTest(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("missing witness")]
    MissingWitness,
    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownName { kind: &'static str, name: String, known: String },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
