use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(String),
    #[error("value is not a p-adic unit")]
    NotAUnit,
    #[error("value is not p-integral")]
    NotIntegral,
    #[error("operation requires an odd prime")]
    OddPrimeRequired,
    #[error("operation requires p = 2")]
    Char2Required,
    #[error("singular model: discriminant is zero")]
    SingularModel,
    #[error("twist parameter must be nonzero")]
    ZeroTwist,
    #[error("isomorphism has u = 0")]
    DegenerateIsomorphism,
    #[error("model is not minimal: v(disc) = {actual}, minimal value is {minimal}")]
    NotMinimal { actual: i64, minimal: u32 },
    #[error("model is not strongly minimal at p")]
    NotStronglyMinimal,
    #[error("no table row matches")]
    NoMatch,
    #[error("more than one table row matches: {0}")]
    AmbiguousMatch(String),
    #[error("iteration cap {cap} exceeded in {context}")]
    InternalLoopBound { context: &'static str, cap: u32 },
    #[error("table mismatch in {table}: {detail}")]
    TableMismatch { table: String, detail: String },
    #[error("no polynomial P^{v_d}_({family},{j})")]
    UnknownPolynomial { family: String, v_d: u32, j: u32 },
    #[error("malformed table data: {0}")]
    Table(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
