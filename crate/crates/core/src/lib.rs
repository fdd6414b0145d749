//! Bounds and approximations for the number of linear regions of trained
//! rectifier (ReLU) networks.
//!
//! The crate combines four ingredients:
//!
//! * an embedded dense LP/MILP engine ([`lp`], [`milp`]),
//! * a big-M MILP encoding of a rectifier network whose binary projections
//!   are exactly the activation patterns with nonempty regions
//!   ([`formulation`], [`counting`]),
//! * a hashing-based probabilistic lower bound on the number of MILP
//!   solutions via random parity constraints added as lazy cuts
//!   ([`mipbound`]),
//! * analytical upper bounds driven by per-layer activity profiles of the
//!   trained weights ([`bounds`]).
//!
//! All region counts are reported both as exact big integers and on the
//! log2 scale (`eta`).

pub mod analyze;
pub mod bounds;
pub mod counting;
pub mod formulation;
pub mod lp;
pub mod milp;
pub mod mipbound;
pub mod model;
pub mod scalar;

pub use scalar::Scalar;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("layer {layer}: {message}")]
    DimensionMismatch { layer: usize, message: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("input outside the network domain")]
    OutOfDomain,
    #[error("input length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("count must be at least 1")]
    CountBelowOne,
    #[error("empty width list")]
    EmptyWidths,
    #[error("row has {got} coefficients, expected {expected}")]
    RowLengthMismatch { got: usize, expected: usize },
    #[error("simplex stalled after {0} pivots")]
    NumericalFailure(u64),
    #[error("node limit of {0} exceeded")]
    NodeLimit(u64),
    #[error("invalid unit bounds for unit {unit} of layer {layer}")]
    InvalidUnitBounds { layer: usize, unit: usize },
    #[error("big-M constants must be nonnegative")]
    NegativeBigM,
    #[error("parity constraint of size {k} over {available} candidate variables")]
    ParityTooLarge { k: usize, available: usize },
    #[error("{0} unstable units exceed the brute-force cap of {1}")]
    BruteForceTooLarge(usize, usize),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Concrete double-precision aliases; the analysis pipeline uses these.
pub type NetworkModel64 = model::NetworkModel<f64>;
pub type LinearProgram64 = lp::LinearProgram<f64>;
pub type MilpModel64 = milp::MilpModel<f64>;
pub type UnitBounds64 = formulation::UnitBounds<f64>;

/// Single-precision aliases for callers that trade accuracy for memory.
pub type NetworkModel32 = model::NetworkModel<f32>;
pub type LinearProgram32 = lp::LinearProgram<f32>;
