use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock cutoff {0}: at least 5 levels are required")]
    Cutoff(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is tagged {found:?}, expected {expected:?}")]
    SpaceTag {
        expected: crate::hilbert::SpaceTag,
        found: crate::hilbert::SpaceTag,
    },

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("state is not normalized: norm² = {0}")]
    Normalization(f64),

    #[error("density matrix invariant violated: {0}")]
    Invariant(String),

    #[error("integrator step size underflow: h = {0:e}")]
    StepUnderflow(f64),

    #[error("populations of |0> and |3> vanish (p0 + p3 = {0:e}); beta is undefined")]
    UndefinedBeta(f64),

    #[error("no autocorrelation peak above {threshold}; signal looks aperiodic")]
    Aperiodic { threshold: f64 },

    #[error("steady state requires a dissipative channel (pump or kappa > 0)")]
    NoDissipation,

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(key: &str, reason: impl Into<String>) -> Self {
        Error::Validation { key: key.to_string(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
