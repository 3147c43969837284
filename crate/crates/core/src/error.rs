//! Error type shared by every layer of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // ring construction / arithmetic
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("unramified polynomial is reducible mod p: {0}")]
    ReducibleUnramPoly(String),
    #[error("polynomial is not Eisenstein over the unramified subring: {0}")]
    NotEisenstein(String),
    #[error("ring spec is malformed: {0}")]
    InvalidSpec(String),
    #[error("operands belong to different ring specs")]
    SpecMismatch,
    #[error("element is not a unit (positive valuation or zero at working precision)")]
    NonUnit,

    // series
    #[error("series shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("inner series has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("linear coefficient is not a unit")]
    NonUnitLinearTerm,
    #[error("series is degraded: a coefficient has precision floor 0")]
    DegradedSeries,

    // formal module laws
    #[error("series does not satisfy the Lubin-Tate invariants: {0}")]
    NotLtSeries(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("minimal unit index {0} is not a power of p")]
    NotPPower(u64),
    #[error("consistency mismatch: {0}")]
    Mismatch(String),

    // torsion analysis
    #[error("truncation too small: need degree {needed}, have {have}")]
    TruncationTooSmall { needed: u64, have: u64 },
    #[error("series has no unit coefficient up to its truncation")]
    NoUnitCoefficient,
    #[error("law does not have full height: {0}")]
    NotFullHeight(String),

    // group counting
    #[error("enumeration budget of {0} elements exceeded")]
    BudgetExceeded(u64),
    #[error("requested level {requested} exceeds working precision {have}")]
    PrecisionTooLow { requested: u32, have: u32 },
    #[error("count series is not multiplicative: {0}")]
    NonMultiplicativeSeries(String),
    #[error("dimension relation violated: {0}")]
    RelationViolated(String),
    #[error("catalog check failed: {0}")]
    CatalogViolation(String),

    // reports / CLI
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ParseError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
