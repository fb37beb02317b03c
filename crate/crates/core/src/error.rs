use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operator must have exactly one eigenvalue below the continuum threshold.
    #[error("spectral assumption violated: {count} eigenvalue(s) below m^2 (expected 1): {eigenvalues:?}")]
    SpectralAssumption { count: usize, eigenvalues: Vec<f64> },

    #[error("frequency window violated: no N with (2N-1)*omega < m < (2N+1)*omega for omega={omega}, m={mass}, N={order}")]
    FrequencyWindow { omega: f64, mass: f64, order: usize },

    #[error("borderline resonance: |m - (2N+1)*omega| = {gap:e} (omega={omega}, m={mass}, N={order})")]
    BorderlineResonance { omega: f64, mass: f64, order: usize, gap: f64 },

    #[error("weak resonance: 3*omega = {three_omega} does not exceed m = {mass}")]
    WeakResonance { three_omega: f64, mass: f64 },

    #[error("small divisor for monomial xi^{mu} xibar^{nu} ({kind}): divisor {divisor:e}")]
    SmallDivisor { mu: u32, nu: u32, kind: &'static str, divisor: f64 },

    #[error("truncation overflow: {0}")]
    TruncationOverflow(String),

    #[error("flow left the admissible ball: |z| = {norm:e} > {radius:e} at t = {time}")]
    DomainExit { norm: f64, radius: f64, time: f64 },

    #[error("blow-up detected at t = {time}: sup|w| = {sup:e} exceeds {bound:e}")]
    BlowupDetected { time: f64, sup: f64, bound: f64 },

    #[error("comparison hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("phase unwrap failed between t = {t0} and t = {t1} (jump {jump})")]
    PhaseAmbiguous { t0: f64, t1: f64, jump: f64 },

    #[error("fit window [{t0}, {t1}] holds {count} samples (need at least {required})")]
    EmptyWindow { t0: f64, t1: f64, count: usize, required: usize },

    #[error("eigensolver failed to converge at index {0}")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
