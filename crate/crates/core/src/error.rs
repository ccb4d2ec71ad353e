use thiserror::Error;

/// Errors raised by interval rules, numerical machinery and the simulation
/// harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The level-set threshold lies above the maximised log-likelihood.
    /// With an exact mixture density this cannot happen; it signals an
    /// inaccurate `log q_n`.
    #[error("threshold {threshold} exceeds the log-likelihood maximum {max}")]
    ThresholdAboveMax { threshold: f64, max: f64 },

    #[error("could not bracket the {side} endpoint of the level set")]
    NoBracket { side: Side },

    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },

    #[error("quadrature tolerance not met: estimate {estimate}, error bound {error}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    #[error("s1 = {s1} is outside the support [{lo}, {hi}]")]
    Support { s1: u64, lo: u64, hi: u64 },

    /// The region extends to ±∞ (flat or monotone likelihood on the real line).
    #[error("region is unbounded")]
    UnboundedRegion,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Lower => f.write_str("lower"),
            Side::Upper => f.write_str("upper"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
