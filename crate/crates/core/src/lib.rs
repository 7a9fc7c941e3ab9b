//! Exact symbolic kernel for degeneracy invariants of formal holomorphic maps
//! between generic submanifolds in normal coordinates.
//!
//! Everything here is exact: coefficients are Gaussian rationals, series are
//! sparse truncated power series with a recorded valid order, and every rank
//! or dimension decision is made by fraction-free Gaussian elimination. No
//! floating point is used anywhere.
//!
//! The crate is `no_std` (with `alloc`); IO, JSON and the command line live in
//! the companion `crdeg` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod degeneracy;
pub mod identity;
pub mod linalg;
pub mod manifold;
pub mod map;
pub mod sampling;
pub mod scalar;
pub mod segre;
pub mod series;
pub mod solve;
pub mod symbols;
pub mod vars;

use alloc::string::String;

/// Errors shared by the whole kernel. Each variant corresponds to a violated
/// precondition or an input that cannot be processed; mathematical negatives
/// (a map that is not transversal, a manifold that is not of finite type) are
/// ordinary results, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two series that must share a variable context do not.
    VariableMismatch { expected: String, found: String },
    /// Two series that must share a truncation order do not.
    OrderMismatch { left: u32, right: u32 },
    /// Raising the order of a genuinely truncated series would fabricate
    /// unknown coefficients.
    OrderRaiseOnTruncated { from: u32, to: u32 },
    /// A term of a series literal exceeds the declared order.
    TermBeyondOrder { degree: u32, order: u32 },
    /// Differentiating a truncated series of order zero leaves no valid
    /// coefficients.
    OrderExhausted { needed: u32, available: u32 },
    /// Substituting a series with nonzero constant term into a genuinely
    /// truncated series; re-centering is exact only for polynomials.
    RecenterTruncated { variable: String },
    /// A dimension or index is out of range for the object it addresses.
    DimensionMismatch { expected: usize, found: usize },
    /// Division by zero in the scalar field.
    DivisionByZero,
    /// A textual scalar that does not parse as a rational number.
    InvalidScalarLiteral { text: String },
    /// A matrix that must be invertible is singular.
    SingularMatrix { context: &'static str },
    /// The defining series fail the normal-form conditions.
    NotNormalForm { generator: usize, reason: String },
    /// A supplied point does not satisfy the defining equations exactly.
    PointNotOnManifold { generator: usize },
    /// An operation requiring exact polynomial data received a truncated
    /// series.
    PolynomialRequired { context: &'static str },
    /// A hypothesis of the invoked construction fails on this input.
    HypothesisNotMet { context: &'static str, detail: String },
    /// The requested derivative count exceeds what the working order admits.
    InsufficientOrder { context: &'static str, needed: u32, available: u32 },
    /// An identity that must hold to working order failed to verify; this
    /// indicates an inconsistent input (or a bug), never a negative verdict.
    ResidualNonzero { context: &'static str },
    /// Exhausted the sampling budget without finding a suitable point.
    SamplingExhausted { context: &'static str },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::VariableMismatch { expected, found } => {
                write!(f, "variable context mismatch: expected {expected}, found {found}")
            }
            Error::OrderMismatch { left, right } => {
                write!(f, "truncation order mismatch: {left} vs {right}")
            }
            Error::OrderRaiseOnTruncated { from, to } => {
                write!(f, "cannot raise order of truncated series from {from} to {to}")
            }
            Error::TermBeyondOrder { degree, order } => {
                write!(f, "series literal has a term of degree {degree} beyond order {order}")
            }
            Error::OrderExhausted { needed, available } => {
                write!(f, "order exhausted: need {needed} valid orders, have {available}")
            }
            Error::RecenterTruncated { variable } => {
                write!(
                    f,
                    "substituting nonzero constant term for {variable} into a truncated series"
                )
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::InvalidScalarLiteral { text } => {
                write!(f, "invalid rational literal {text:?} (expected \"a\" or \"a/b\")")
            }
            Error::SingularMatrix { context } => write!(f, "singular matrix in {context}"),
            Error::NotNormalForm { generator, reason } => {
                write!(f, "generator {generator} violates normal form: {reason}")
            }
            Error::PointNotOnManifold { generator } => {
                write!(f, "point fails defining equation {generator} exactly")
            }
            Error::PolynomialRequired { context } => {
                write!(f, "{context} requires exact polynomial data")
            }
            Error::HypothesisNotMet { context, detail } => {
                write!(f, "hypothesis of {context} not met: {detail}")
            }
            Error::InsufficientOrder { context, needed, available } => {
                write!(f, "{context}: working order {available} too small, need {needed}")
            }
            Error::ResidualNonzero { context } => {
                write!(f, "{context}: residual failed to vanish to working order")
            }
            Error::SamplingExhausted { context } => {
                write!(f, "{context}: sampling budget exhausted")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
