use thiserror::Error;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no synchronous equilibrium: |torque/coupling| = {ratio} exceeds 1")]
    NoEquilibrium { ratio: f64 },

    #[error("truncation too small: n_max = {n_max}, q_max = {q_max} (need n_max >= 2, q_max >= 1)")]
    TruncationTooSmall { n_max: usize, q_max: usize },

    #[error("eigen-decomposition failed or is defective (relative residual {residual:e})")]
    DefectiveMatrix { residual: f64 },

    #[error("truncation did not converge: last change {change:e} at n_max = {n_max}, q_max = {q_max}")]
    NotConverged { change: f64, n_max: usize, q_max: usize },

    #[error("matrix continued fraction step {level} is singular (condition estimate {condition:e})")]
    SingularStep { level: usize, condition: f64 },

    #[error("normalization undefined: initial and final angles coincide")]
    DegenerateNormalization,

    #[error("overdamped: zeta_ii cos(delta_ii) = {stiffness} <= beta^2/4 = {threshold}")]
    Overdamped { stiffness: f64, threshold: f64 },

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("spectral maximum lies on the grid boundary at omega = {omega}")]
    PeakAtBoundary { omega: f64 },

    #[error("rotor velocity has no maximum-type sign change before t = {horizon}")]
    NoExtremum { horizon: f64 },

    #[error("envelope undefined: normalized angle at first maximum is {value}")]
    EnvelopeUndefined { value: f64 },

    #[error("integrator step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("grid machines de-cohered: spread {spread:e}")]
    ReductionViolated { spread: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
