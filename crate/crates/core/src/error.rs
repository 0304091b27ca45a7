use num_bigint::BigInt;
use thiserror::Error;

/// Every failure the library can report.
///
/// The last group (`ExtractionFailure` onwards) are tripwires: each one
/// names an identity that must hold on valid input, so seeing one means a
/// bug rather than bad data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("index {index} out of range (expected {expected})")]
    Range { index: usize, expected: String },

    #[error("operands live in different rings")]
    ContextMismatch,

    #[error("degree-2 matrix has determinant {det}, expected ±1")]
    NotUnimodular { det: BigInt },

    #[error("relation for x_{index} is violated; residue {residue}")]
    RelationViolated { index: usize, residue: String },

    #[error("cannot well-order: switch at j={j} is blocked by entry {entry}")]
    WellOrderFailure { j: usize, entry: BigInt },

    #[error("switch at j={j} is blocked: b_(j+1,j) = {entry}")]
    SwitchBlocked { j: usize, entry: BigInt },

    #[error("twist rejected: {0}")]
    TwistInvalid(String),

    #[error("class is not integral: {0}")]
    NotIntegral(String),

    #[error("sigma/epsilon extraction failed at x_{index}: {reason}")]
    ExtractionFailure { index: usize, reason: String },

    #[error("decomposition of the tracked image is inconsistent: {0}")]
    DecompositionInconsistent(String),

    #[error("odd entry at the boundary (ell = {ell}, k = {k}); use raise_stability")]
    OddAtBoundary { ell: usize, k: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("proof path violation: {0}")]
    ProofPathViolation(String),

    #[error("no termination after {steps} key steps")]
    NonTermination { steps: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
