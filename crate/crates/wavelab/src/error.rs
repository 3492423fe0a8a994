use thiserror::Error;

/// Errors produced by the laboratory's numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e}, wanted {tolerance:e})")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },

    /// A user-supplied nonlinearity failed a construction spot check.
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    /// Two grid functions do not share lattice geometry.
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// The lattice does not cover the requested backward cone.
    #[error("lattice does not cover the cone with apex ({apex_x}, {apex_t})")]
    ConeNotCovered { apex_x: f64, apex_t: f64 },

    /// Fixed-point iteration left the stability ball.
    #[error("iteration diverged at step {step}: sup-norm {sup_norm:e} exceeds bound {bound:e}")]
    IterationDiverged {
        step: usize,
        sup_norm: f64,
        bound: f64,
    },

    /// Fixed-point iteration hit the step cap without converging.
    #[error("iteration stagnated after {steps} steps (last difference {last_diff:e}, tolerance {tolerance:e})")]
    IterationStagnated {
        steps: usize,
        tolerance: f64,
        last_diff: f64,
    },

    /// A non-finite value appeared during time marching.
    #[error("non-finite value at row {row} (t = {t})")]
    NumericalOverflow { row: usize, t: f64 },

    /// Blow-up time extrapolation prerequisites were not met.
    #[error("extrapolation unreliable: {0}")]
    ExtrapolationUnreliable(String),

    /// Too few usable records for a fit.
    #[error("insufficient data: {got} uncensored records, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    /// Malformed tabulated initial data.
    #[error("invalid data table: {0}")]
    InvalidDataTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
