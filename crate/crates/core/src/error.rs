//! Error types shared across the crate.

use thiserror::Error;

/// Why a planning request has no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The start cell is not in the feasible set.
    StartInfeasible { i: usize, j: usize },
    /// The goal cell is not in the feasible set.
    GoalInfeasible { i: usize, j: usize },
    /// Start and goal are feasible but disconnected.
    NoPath,
}

impl InfeasibleReason {
    /// Stable machine-readable code for reports and CSV output.
    pub fn code(&self) -> &'static str {
        match self {
            InfeasibleReason::StartInfeasible { .. } => "start_infeasible",
            InfeasibleReason::GoalInfeasible { .. } => "goal_infeasible",
            InfeasibleReason::NoPath => "no_path",
        }
    }
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfeasibleReason::StartInfeasible { i, j } => {
                write!(f, "start cell ({i}, {j}) is below the gain threshold")
            }
            InfeasibleReason::GoalInfeasible { i, j } => {
                write!(f, "goal cell ({i}, {j}) is below the gain threshold")
            }
            InfeasibleReason::NoPath => write!(f, "no feasible path connects start and goal"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell index ({i}, {j}) outside grid of {x} x {y} cells")]
    IndexOutOfRange { i: usize, j: usize, x: usize, y: usize },

    #[error("point ({x}, {y}) lies outside the mapped region")]
    OutOfRegion { x: f64, y: f64 },

    #[error("location ({x}, {y}) is inside an obstacle footprint")]
    InfeasibleLocation { x: f64, y: f64 },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("phase vector has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("quantization needs at least 2 levels, got {0}")]
    BadLevels(u32),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("planning infeasible: {0}")]
    Infeasible(InfeasibleReason),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
