use thiserror::Error;

/// Errors reported by the algebra and group machinery.
///
/// Variants mirror the failure modes of the public operations; anything that
/// indicates a bug in the mathematics itself (e.g. a theta factor evaluating
/// to infinity) surfaces as [`Error::Assertion`] with context rather than a
/// panic, so batch runs can report it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be >= 1")]
    BadDegree,
    #[error("field size {q} exceeds the configured bound {bound}")]
    FieldTooLarge { q: u128, bound: u64 },
    #[error("elements belong to different fields (p^m = {0} vs {1})")]
    FieldMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot invert a series that is zero to its precision")]
    InvertZeroSeries,
    #[error("series variable mismatch: {0} vs {1}")]
    VariableMismatch(String, String),
    #[error("series support not divisible by {divisor}: offending exponent {exponent}")]
    Support { divisor: i64, exponent: i64 },
    #[error("series valuation {found} where {expected} was required")]
    Valuation { expected: i64, found: i64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency assertion failed: {0}")]
    Assertion(String),
    #[error("theta oracle descent failure: coefficient of t^{exponent} ({value}) lies outside F_q")]
    DescentFailure { exponent: i64, value: String },
    #[error("product not certified after {0} factors")]
    NotCertified(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
