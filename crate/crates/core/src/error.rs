use thiserror::Error;

/// Errors raised while building or evaluating a scattering system.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid energy: wavenumber must be positive and finite, got k = {0}")]
    InvalidEnergy(f64),

    #[error("degenerate transfer matrix: |m22| = 0")]
    DegenerateMatrix,

    #[error("overlap violation at tier {tier}: period {period} is shorter than the span {span} it repeats")]
    OverlapViolation { tier: usize, period: f64, span: f64 },

    #[error("non-positive period {period} at tier {tier}")]
    NonPositivePeriod { tier: usize, period: f64 },

    #[error("invalid tier {tier}: repetition count must be at least 1")]
    InvalidRepeatCount { tier: usize },

    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("invalid fractal: {0}")]
    InvalidFractal(String),

    #[error("fractal kind mismatch: {0}")]
    KindMismatch(String),

    #[error("not a resonance: |U_(N1-1)(xi_1)| = {0:e} at the supplied k")]
    NotAResonance(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported system: {0}")]
    Unsupported(String),

    #[error("invalid potential profile: {0}")]
    InvalidProfile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
