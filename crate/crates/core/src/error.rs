use thiserror::Error;

/// Errors raised by the solvers and the diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solution diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("singular linear system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("backward kernel evaluated outside its domain: t = {t}, t0 = {t0}")]
    KernelDomain { t: f64, t0: f64 },

    #[error("time {t} outside the sampled range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
