//! Bernoulli proportion: the exact Robbins sequence through the
//! beta-binomial mixture, the likelihood-ratio interval, and the
//! arcsine (variance-stabilised) closed-form approximation.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::engine::{self, integrate_log, FnLogLikelihood, MixtureLogDensity, QuadratureOptions, Region, Support};
use crate::error::{Error, Result};
use crate::interval::{check_confidence, Interval, PersistenceLevel};
use crate::special::{chi2_1_quantile, ln_beta, ln_choose, xlogy};
use crate::weight::{BetaWeight, NormalWeight};

/// `(n, s)`: number of trials and number of successes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernoulliSuffStat {
    n: u64,
    s: u64,
}

impl BernoulliSuffStat {
    pub fn new(n: u64, s: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "sample size must be at least 1",
            });
        }
        if s > n {
            return Err(Error::InvalidParameter {
                name: "s",
                value: s as f64,
                reason: "successes cannot exceed the sample size",
            });
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn mle(&self) -> f64 {
        self.s as f64 / self.n as f64
    }

    /// `(n, n − s)`.
    pub fn reflected(&self) -> Self {
        Self {
            n: self.n,
            s: self.n - self.s,
        }
    }
}

/// `s ln θ + (n − s) ln(1 − θ)`, without the binomial coefficient.
#[inline]
pub(crate) fn kernel_ln_lik(n: f64, s: f64, theta: f64) -> f64 {
    xlogy(s, theta) + xlogy(n - s, 1.0 - theta)
}

/// Binomial log-likelihood `ln C(n,s) + s ln θ + (n−s) ln(1−θ)` on `[0, 1]`.
pub fn binomial_log_likelihood(stat: &BernoulliSuffStat) -> FnLogLikelihood<impl Fn(f64) -> f64> {
    let (n, s) = (stat.n as f64, stat.s as f64);
    let c = ln_choose(stat.n, stat.s);
    let mle = stat.mle();
    let scale = if stat.s == 0 || stat.s == stat.n {
        1.0 / n
    } else {
        (mle * (1.0 - mle) / n).sqrt()
    };
    FnLogLikelihood::new(move |t| c + kernel_ln_lik(n, s, t), mle)
        .with_support(Support::UNIT)
        .with_scale(scale)
}

/// `ln q_n(s) = ln C(n,s) + ln B(s+α, n−s+β) − ln B(α,β)`.
pub fn beta_binomial_log_pmf(stat: &BernoulliSuffStat, weight: &BetaWeight) -> f64 {
    let (n, s) = (stat.n as f64, stat.s as f64);
    let (a, b) = (weight.alpha(), weight.beta());
    ln_choose(stat.n, stat.s) + ln_beta(s + a, n - s + b) - ln_beta(a, b)
}

/// Exact Robbins region with truncation flags.
pub fn robbins_region_bernoulli(
    stat: &BernoulliSuffStat,
    weight: &BetaWeight,
    level: PersistenceLevel,
) -> Result<Region> {
    let ll = binomial_log_likelihood(stat);
    let q = MixtureLogDensity::exact(beta_binomial_log_pmf(stat, weight));
    engine::robbins_region(&ll, q, level)
}

/// `{θ : p_n(s; θ) ≥ ε q_n(s)}` with a beta-binomial `q_n`.
pub fn robbins_interval_bernoulli(
    stat: &BernoulliSuffStat,
    weight: &BetaWeight,
    level: PersistenceLevel,
) -> Result<Interval> {
    robbins_region_bernoulli(stat, weight, level).map(|r| r.interval)
}

/// Likelihood-ratio interval `{θ : ℓ(θ) ≥ ℓ(θ̂) − χ²_{1,conf}/2}`.
pub fn lr_interval(stat: &BernoulliSuffStat, conf: f64) -> Result<Interval> {
    check_confidence(conf)?;
    let ll = binomial_log_likelihood(stat);
    let threshold = engine::LogLikelihood::max_ln_lik(&ll) - 0.5 * chi2_1_quantile(conf);
    engine::level_set(&ll, threshold).map(|r| r.interval)
}

/// `ω(θ) = arcsin √θ`.
pub fn omega(theta: f64) -> f64 {
    theta.clamp(0.0, 1.0).sqrt().asin()
}

/// Inverse of [`omega`], `θ = sin² ω`, with `ω` clipped to `[0, π/2]`.
pub fn omega_inverse(omega: f64) -> f64 {
    omega.clamp(0.0, FRAC_PI_2).sin().powi(2)
}

/// Closed-form approximate sequence in the arcsine scale,
/// `ω(ȳ) ± d_n(1/4)` with a normal weight on `ω`, mapped back to `θ`.
pub fn arcsine_approx_interval(
    stat: &BernoulliSuffStat,
    weight_on_omega: &NormalWeight,
    level: PersistenceLevel,
) -> Result<Interval> {
    let w = omega(stat.mle());
    let d = engine::closed_form_half_width(0.25, stat.n, w, weight_on_omega, level)?;
    Interval::new(omega_inverse(w - d), omega_inverse(w + d))
}

/// Normal weight on `ω` with the mean and variance of `ω(θ)` when
/// `θ ~ Beta(α, β)`, computed by quadrature. For `Beta(½, ½)` this is
/// `N(π/4, π²/48)`.
pub fn omega_matched_weight(beta: &BetaWeight) -> Result<NormalWeight> {
    let (a, b) = (beta.alpha(), beta.beta());
    let center = a / (a + b);
    let scale = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
    let opts = QuadratureOptions {
        rel_tol: 1e-11,
        ..Default::default()
    };
    let mean = integrate_log(|t| omega(t).ln() + beta.ln_pdf(t), Support::UNIT, center, scale, &opts)?.exp();
    let var = integrate_log(
        |t| 2.0 * (omega(t) - mean).abs().ln() + beta.ln_pdf(t),
        Support::UNIT,
        center,
        scale,
        &opts,
    )?
    .exp();
    NormalWeight::new(mean, var)
}
