//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]; the variants
//! carry enough context to tell a caller *which* precondition broke (bad
//! family data, a p-adic precision shortfall, a series that did not converge,
//! ...) without string matching.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    // ---- finite fields ----
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be positive")]
    ZeroExtensionDegree,
    #[error("field size {q} exceeds the log-table cap {cap}")]
    TableCapExceeded { q: u64, cap: u64 },
    #[error("discrete log of zero is undefined")]
    DlogOfZero,
    #[error("{0} does not encode an element of this field")]
    NotAFieldElement(u64),
    #[error("character order {d} does not divide q - 1 = {qm1}")]
    CharacterOrderInvalid { d: u64, qm1: u64 },

    // ---- p-adic rings ----
    #[error("denominator {0} is divisible by p; not invertible in Z_q")]
    DenominatorNotInvertible(String),
    #[error("matrix determinant has valuation {0}; inverse needs a unit determinant")]
    NonUnitDeterminant(u32),
    #[error("no integer of absolute value <= {bound} matches the residue")]
    NoIntegerInRange { bound: String },
    #[error("ring precision {have} too small: {need}")]
    PrecisionInsufficient { have: u32, need: String },
    #[error("elements belong to rings with different (p, r, N)")]
    RingMismatch,
    #[error("value expected in the prime subring Z_p but has nonconstant coordinates")]
    NotInPrimeSubring,

    // ---- families and monomial data ----
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("monomial type {0:?} is not admissible for this family")]
    InadmissibleType(Vec<u64>),
    #[error("exponent vector and pole order are inconsistent: {0}")]
    ReductionMismatch(String),

    // ---- Frobenius / Jacobi layer ----
    #[error("type vector is degenerate (has a zero entry mod d); Jacobi sum undefined")]
    DegenerateType,
    #[error("q = {q} is not congruent to 1 mod d = {d}")]
    IncompatibleResidue { q: u64, d: u64 },
    #[error("no calibration convention reproduces the point counts: {0}")]
    NoConventionMatches(String),
    #[error("fiber is not quasi-smooth at lambda = {lambda} (char {p})")]
    QuasiSmoothnessViolation { lambda: u64, p: u64 },

    // ---- deformation series ----
    #[error(
        "series tail has not converged at order {order}: min tail valuation {min_valuation}, \
         needed {needed}"
    )]
    TailNotConverged {
        order: usize,
        min_valuation: u32,
        needed: u32,
    },
    #[error("series order cap {0} reached without tail convergence")]
    SeriesOrderCapExceeded(usize),
    #[error("evaluation point is not a Teichmüller representative (λ^q ≠ λ)")]
    NotTeichmueller,
    #[error("composite Frobenius series is not p-integral: {0}")]
    NonIntegralSeries(String),

    // ---- zeta assembly ----
    #[error("characteristic polynomial coefficient fails the divisibility needed for P(t): {0}")]
    NonIntegralZeta(String),
    #[error("functional equation violated for factor of degree {degree} at index {index}")]
    FunctionalEquation { degree: usize, index: usize },

    // ---- point counting ----
    #[error("counting workload {0} exceeds the evaluation cap {1}")]
    WorkCapExceeded(u128, u128),
    #[error("point counts are mutually inconsistent: {0}")]
    InconsistentCounts(String),
    #[error("counts do not determine the numerator uniquely: {0}")]
    Indeterminate(String),

    // ---- persistence ----
    #[error("cache I/O failed: {0}")]
    Cache(String),
}
