use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[lower, upper]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lower",
                value: lower,
                reason: "interval endpoints must be finite",
            });
        }
        if !upper.is_finite() {
            return Err(Error::InvalidParameter {
                name: "upper",
                value: upper,
                reason: "interval endpoints must be finite",
            });
        }
        if lower > upper {
            return Err(Error::InvalidParameter {
                name: "lower",
                value: lower,
                reason: "lower endpoint exceeds upper endpoint",
            });
        }
        Ok(Self { lower, upper })
    }

    /// `center ± half_width`.
    pub fn symmetric(center: f64, half_width: f64) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when `other` lies inside `self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    /// Image under a monotone increasing map.
    pub fn map_increasing(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(f(self.lower), f(self.upper))
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*}, {:.*}]", p, self.lower, p, self.upper),
            None => write!(f, "[{}, {}]", self.lower, self.upper),
        }
    }
}

/// Persistence level `1 − ε`, stored as `ε ∈ (0, 1)`.
///
/// With probability at least `1 − ε` the true parameter lies in every
/// region of a Robbins sequence, which also bounds the probability of any
/// contradiction by `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceLevel {
    epsilon: f64,
}

impl PersistenceLevel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0 {
            Ok(Self { epsilon })
        } else {
            Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie strictly inside (0, 1)",
            })
        }
    }

    /// Builds the level from `1 − ε`, e.g. `0.80`.
    pub fn from_persistence(persistence: f64) -> Result<Self> {
        Self::new(1.0 - persistence)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ln_epsilon(&self) -> f64 {
        self.epsilon.ln()
    }

    pub fn persistence(&self) -> f64 {
        1.0 - self.epsilon
    }
}

pub(crate) fn check_confidence(conf: f64) -> Result<f64> {
    if conf.is_finite() && conf > 0.0 && conf < 1.0 {
        Ok(conf)
    } else {
        Err(Error::InvalidParameter {
            name: "conf",
            value: conf,
            reason: "confidence level must lie strictly inside (0, 1)",
        })
    }
}
