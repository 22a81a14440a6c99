use thiserror::Error;

/// Errors raised by the model, estimators and sweep driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("photon number {n} is outside the non-triggered validity domain (n <= {bound})")]
    DomainExceeded { n: usize, bound: usize },

    #[error("closed forms require a symmetric configuration: {0}")]
    AsymmetricConfig(String),

    #[error("{estimator}: precondition violated: {detail}")]
    PreconditionViolated {
        estimator: &'static str,
        detail: String,
    },

    #[error("{estimator}: degenerate denominator")]
    DegenerateDenominator { estimator: &'static str },

    #[error("argument {0} outside [0, 1]")]
    DomainError(f64),

    #[error("vacuum-ratio domain is empty")]
    EmptyAlphaDomain,

    #[error("zero statistics for {quantity}: fluctuation band undefined")]
    ZeroStatistics { quantity: &'static str },

    #[error("no feasible configuration at {distance_km} km")]
    NoFeasibleConfig { distance_km: f64 },

    #[error("gain table has no entry for {0}")]
    MissingEntry(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
