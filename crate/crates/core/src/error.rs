//! Error types shared across the crate.

use thiserror::Error;

use crate::oracle::SlackPoint;

/// Errors raised by delay oracles.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("query point (s={}, h={}) outside the oracle domain [0, {domain}]^2", point.setup, point.hold)]
    OutOfDomain { point: SlackPoint, domain: f64 },
    #[error("invalid oracle parameters: {0}")]
    InvalidParams(String),
    #[error("samples do not form a complete axis-aligned grid: {0}")]
    IncompleteGrid(String),
    #[error("sweep dump line {line}: {message}")]
    DumpFormat { line: usize, message: String },
}

/// Errors raised while characterizing a delay surface.
#[derive(Debug, Error)]
pub enum CharError {
    #[error("invalid characterizer configuration: {0}")]
    InvalidConfig(String),
    #[error("characterization failure: {0}")]
    Failure(String),
    #[error("plane fit is degenerate: chosen corners are collinear")]
    DegenerateFit,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Text parse errors carrying the offending line number.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Errors raised when constructing or inspecting a MILP model.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("term references undeclared variable index {0}")]
    UnknownVariable(usize),
    #[error("variable {0}: {1}")]
    BadVariable(String, String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

/// Errors raised by the period optimizer.
#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("flip-flop {ff} has no polygon intersecting its slack window")]
    NoPolygons { ff: String },
    #[error("triangle polygon {id} has non-positive hypotenuse intercept c_t={c_t}; cannot encode its activation")]
    BadTriangle { id: usize, c_t: f64 },
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("assignment enumeration too large: {0} combinations exceed the limit of {1}")]
    EnumerationLimit(u128, u128),
    #[error("solver gave up: {0}")]
    SolverLimit(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
