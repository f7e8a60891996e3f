use thiserror::Error;

/// Errors raised by the propagator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("imaginary frequency: radicand of {name} is {radicand:e} (must be > 0)")]
    ImaginaryFrequency { name: &'static str, radicand: f64 },

    #[error("resonance violated: Omega2 = {omega2} but omega_q = {omega_q}")]
    ResonanceViolation { omega2: f64, omega_q: f64 },

    #[error("singular quadratic form (|det| = {0:e})")]
    SingularForm(f64),

    #[error("gaussian integral diverges: {0}")]
    Divergent(String),

    #[error("singular operator (|det| = {0:e}); caustic of the discretized kernel")]
    SingularOperator(f64),

    #[error("lambda integrand does not decay: {0}")]
    NonConvergent(String),

    #[error("caustic in mode {mode}: |sin(omega t)| = {sin_abs:e}")]
    Caustic { mode: String, sin_abs: f64 },

    #[error("grid too narrow: boundary amplitude {edge:e} exceeds {limit:e}")]
    GridTooNarrow { edge: f64, limit: f64 },

    #[error("time step too large: dt*max|V|/hbar = {0}")]
    StepTooLarge(f64),

    #[error("unstable step: norm drifted by {0:e}")]
    UnstableStep(f64),

    #[error("grid of {0} points exceeds the dense limit of {1}")]
    TooLarge(usize, usize),

    #[error("bath coupling is retained; the reduced propagator requires the traced (C = 0) mode")]
    CouplingNotTraced,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
