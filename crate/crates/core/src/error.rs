use alloc::string::String;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("grid too coarse: refinement moved eigenvalue {index} by {change:e}")]
    GridTooCoarse { index: usize, change: f64 },

    #[error("density matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("probe amplitude {amplitude:e} at |y| = 1 where the noise function diverges")]
    ProbeAtBoundary { amplitude: f64 },

    #[error("collective dephasing {kappa0} is in the wrapped-phase regime (needs kappa0 < 1)")]
    WrappedPhase { kappa0: f64 },

    #[error("state norm drifted by {drift:e}")]
    NormDrift { drift: f64 },

    #[error("singular linear system")]
    SingularSystem,

    #[error("time-step refinement did not settle (last change in P0 {change:e})")]
    StepRefinement { change: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
