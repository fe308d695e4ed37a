use thiserror::Error;

use crate::space::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("component {component} is not connected (point {point} unreachable from 0)")]
    DisconnectedComponent { component: usize, point: Point },

    #[error("component {component} has no points")]
    EmptyComponent { component: usize },

    #[error("component {component}: point {point} out of range (size {size})")]
    InvalidPoint {
        component: usize,
        point: u64,
        size: usize,
    },

    #[error("component {component}: invalid metric ({reason})")]
    InvalidMetric { component: usize, reason: String },

    #[error("objects live over different space families")]
    SpaceMismatch,

    #[error("generators do not generate the group: reached {reached} of {order} elements")]
    NotGenerating { reached: usize, order: usize },

    #[error("generator set is not closed under inverses: {0}")]
    NonSymmetricGenerators(String),

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("family needs {required} points, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("{0} is not a prime >= 3")]
    NotPrime(u64),

    #[error("pair ({x}, {y}) in component {component} is not covered by the translation system")]
    SupportNotCovered { component: usize, x: Point, y: Point },

    #[error("pair ({x}, {y}) in component {component} violates the partial-injection property")]
    NotPartialInjection { component: usize, x: Point, y: Point },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("translation system is empty")]
    EmptySystem,

    #[error("translation system is malformed: {0}")]
    InvalidSystem(String),

    #[error("component {component} has no spectral gap (lambda = {lambda})")]
    NoGap { component: usize, lambda: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid exponent {0}")]
    InvalidExponent(f64),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
