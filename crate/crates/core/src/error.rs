use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("multiplicity mismatch: {left} vs {right}")]
    MultiplicityMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("mesh level {level} exceeds the guard (max {max})")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("point ({x}, {y}) lies outside the meshed disk")]
    OutsideDomain { x: f64, y: f64 },

    #[error("Moebius parameter |a| = {0} must be < 1")]
    MobiusParameter(f64),

    #[error("hypothesis violated at vertex {vertex}: {reason}")]
    Hypothesis { vertex: usize, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
