//! Confidence sequences for the mean of a normal population, a Bernoulli
//! proportion and the log odds ratio of two Bernoulli populations.
//!
//! A confidence sequence `{I_n}` contains the true parameter simultaneously
//! for every sample size `n` with probability at least `1 − ε`. The sequences
//! here are likelihood level sets: `I_n = {θ : ℓ_n(θ) ≥ ln ε + ln q_n}`,
//! where `q_n` is the marginal density of the data under a weight over `θ`.

pub mod bernoulli;
pub mod engine;
pub mod error;
pub mod interval;
pub mod monitor;
pub mod normal;
pub mod simulation;
pub mod special;
pub mod two_bernoulli;
pub mod weight;

pub use engine::{
    closed_form_half_width, laplace_log_mixture, quadrature_log_mixture, robbins_region, verify_ville_inequality,
    LogLikelihood, MixtureLogDensity, Region, Support,
};
pub use error::{Error, Result};
pub use interval::{Interval, PersistenceLevel};
pub use monitor::SequenceMonitor;
pub use weight::{BetaWeight, LogOddsWeight, NormalInverseGamma, NormalWeight, WeightSpec};
