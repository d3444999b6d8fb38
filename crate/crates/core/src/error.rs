//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid damping preset: {0}")]
    Preset(String),

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Newton did not converge at step {step} (t = {t}): residual {residual:e} after {iters} iterations")]
    NewtonDiverged {
        step: usize,
        t: f64,
        residual: f64,
        iters: usize,
    },

    #[error("non-finite values detected at step {step}")]
    NonFinite { step: usize },

    #[error("initial data: {0}")]
    InitialData(String),

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("observability: undamped or trapped data (dissipation denominator is zero)")]
    UndampedOrTrapped,

    #[error("undamped configuration: the Kelvin-Voigt coefficient vanishes identically")]
    UndampedConfiguration,

    #[error("trajectory does not reach t = {0}")]
    HorizonNotReached(f64),

    #[error("generator size {n} exceeds the dense eigenanalysis guard ({guard} nodes); pass allow_large to override")]
    SizeGuard { n: usize, guard: usize },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("spectral diagnostic: {0}")]
    Spectral(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("config parse: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the time integrator itself (CLI exit code 2);
    /// everything else is a validation/usage error (exit code 1).
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NewtonDiverged { .. } | Error::NonFinite { .. })
    }
}
