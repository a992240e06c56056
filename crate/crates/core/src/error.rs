//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    /// A diffusion or memory operation was given a generator whose
    /// primitivity has not been established.
    #[error("generator 0x{modulus:x} (degree {degree}) is not verified primitive")]
    UnverifiedGenerator { modulus: u64, degree: u32 },

    /// Exhaustive enumeration was requested beyond the supported degree.
    #[error("degree {m} exceeds the enumeration bound {max}")]
    DegreeTooLarge { m: u32, max: u32 },

    /// An avalanche orbit longer than the multiplicative group was requested.
    #[error("orbit length {requested} exceeds 2^{m} - 1 = {max}")]
    OrbitTooLong { requested: u64, m: u32, max: u64 },

    /// An input did not have the length the receiver was configured for.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A memory configuration violated one of its invariants.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// A gated-schedule operation was attempted on a unified-schedule memory.
    #[error("operation requires the gated schedule")]
    ScheduleViolation,

    /// A read produced no winner (all blocks abstained, no rescue hit),
    /// or a traversal frontier emptied before completing any path.
    #[error("not found")]
    NotFound,

    /// Bundling requires at least one input vector.
    #[error("cannot bundle an empty list")]
    EmptyBundle,

    /// Two hypervectors of different dimensions were combined.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A record surgery referenced a role the record does not carry.
    #[error("role {0:?} absent from record")]
    RoleAbsent(String),

    /// Abduction found no stored world matching the evidence.
    #[error("abduction failed: no stored world matches the evidence")]
    AbductionFailed,

    /// The factual trace carries zero confidence; the ratio is undefined.
    #[error("factual trace has cr2 = 0; estimator undefined")]
    DegenerateFactual,

    /// All depth groups share one mean; no decay can be fitted.
    #[error("degenerate fit: all depths share a single mean confidence")]
    DegenerateFit,

    /// A serialized value (generator, polynomial, snapshot, query) was malformed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
