use thiserror::Error;

/// Errors raised by lattice, solver, ADHM and continuum routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice shape: {0}")]
    InvalidShape(String),

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("boundary terms are only defined for zero-padded lattices")]
    BoundaryTermsOnPeriodic,

    #[error("operation requires a periodic lattice")]
    RequiresPeriodic,

    #[error("gauge matrix at site (j={j}, k={k}) is not unitary (deviation {deviation:.3e})")]
    NotUnitary { j: usize, k: usize, deviation: f64 },

    #[error("entry {name}[j={j}, k={k}] = {value} is not a positive real")]
    NonPositive {
        name: &'static str,
        j: usize,
        k: usize,
        value: f64,
    },

    #[error("solver did not converge for (n1={n1}, n2={n2}) after {iterations} iterations; best scaled residual {best_residual:.3e}")]
    NonConvergence {
        n1: usize,
        n2: usize,
        iterations: usize,
        best_residual: f64,
    },

    #[error("normalization infeasible: {0}")]
    NormalizationInfeasible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sampler failed at ({x}, {y}): {reason}")]
    Sampler { x: f64, y: f64, reason: String },

    #[error("finite-difference step {0:e} is too small")]
    StepTooSmall(f64),

    #[error("grid touches r = 0 at ({r1}, {r2})")]
    SingularRadius { r1: f64, r2: f64 },

    #[error("s = {0} lies outside the open interval (-1, 1)")]
    OutsideInterval(f64),

    #[error("at least {needed} sizes are required for a convergence fit, got {got}")]
    TooFewSizes { needed: usize, got: usize },

    #[error("input is not a solution: {0}")]
    NotASolution(String),

    #[error("empty spectral parameter list")]
    EmptyZetas,

    #[error("i/o: {0}")]
    Io(String),

    #[error("data file: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
