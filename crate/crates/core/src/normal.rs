//! Normal mean: the exact Robbins sequence with known variance, the profile
//! sequence under a normal-inverse-gamma weight when the variance is
//! unknown, the Wald-type approximation, and the classical z-interval.
//!
//! # Profile sequence with unknown variance
//!
//! For `y_1..y_n ~ N(μ, σ²)` the profile log-likelihood of `μ` is
//!
//! ```text
//! ℓ_p(μ) = −(n/2) ln(2π σ̂²_μ) − n/2,   σ̂²_μ = σ̂² + (ȳ − μ)²
//! ```
//!
//! and under the weight `1/σ² ~ Gamma(α0, β0)`, `μ | σ² ~ N(μ0, σ²/κ0)` the
//! mixture density of the sample is
//!
//! ```text
//! ln q_n = −(n/2) ln 2π + ½ ln(κ0/κn) + α0 ln β0 − αn ln βn + ln Γ(αn) − ln Γ(α0)
//! κn = κ0 + n,  αn = α0 + n/2,  βn = β0 + ½ (n σ̂² + κ0 n (ȳ − μ0)² / κn).
//! ```
//!
//! The region `ℓ_p(μ) ≥ ln ε + ln q_n` is `σ̂²_μ ≤ exp(−2K/n)` with
//! `K = ln ε + ln q_n + (n/2) ln 2π + n/2`, i.e. `ȳ ± σ̂ h_n` where
//!
//! ```text
//! h_n = sqrt( exp(−2K/n) / σ̂² − 1 ).
//! ```
//!
//! `K` never exceeds `−(n/2) ln σ̂²` because `q_n` is bounded by the maximised
//! likelihood, so the square root is always real.

use serde::{Deserialize, Serialize};

use crate::engine::{self, FnLogLikelihood, MixtureLogDensity, Region};
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::interval::{check_confidence, Interval, PersistenceLevel};
use crate::special::{ln_gamma, normal_ln_pdf, two_sided_z, LN_2PI};
use crate::weight::{NormalInverseGamma, NormalWeight};

/// Sufficient statistics of a normal sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSuffStat {
    n: u64,
    ybar: f64,
    sigma_hat_sq: f64,
}

impl NormalSuffStat {
    /// `sigma_hat_sq` is the maximum likelihood variance `(1/n) Σ (y_i − ȳ)²`.
    pub fn new(n: u64, ybar: f64, sigma_hat_sq: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "sample size must be at least 1",
            });
        }
        ensure_finite("ybar", ybar)?;
        if !(sigma_hat_sq.is_finite() && sigma_hat_sq >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_hat_sq",
                value: sigma_hat_sq,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { n, ybar, sigma_hat_sq })
    }

    /// Statistics for the known-variance case, where `σ̂²` is not used.
    pub fn known_variance(n: u64, ybar: f64) -> Result<Self> {
        Self::new(n, ybar, 0.0)
    }

    pub fn from_sample(ys: &[f64]) -> Result<Self> {
        let n = ys.len();
        if n == 0 {
            return Self::new(0, 0.0, 0.0);
        }
        let ybar = ys.iter().sum::<f64>() / n as f64;
        let ss = ys.iter().map(|y| (y - ybar).powi(2)).sum::<f64>();
        Self::new(n as u64, ybar, ss / n as f64)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    pub fn sigma_hat_sq(&self) -> f64 {
        self.sigma_hat_sq
    }
}

/// `ȳ ± d_n(σ0²)`, the exact Robbins interval with known variance and a
/// normal weight.
pub fn robbins_interval_known_var(
    stat: &NormalSuffStat,
    sigma0_sq: f64,
    weight: &NormalWeight,
    level: PersistenceLevel,
) -> Result<Interval> {
    ensure_positive("sigma0_sq", sigma0_sq)?;
    let d = engine::closed_form_half_width(sigma0_sq, stat.n, stat.ybar, weight, level)?;
    Interval::symmetric(stat.ybar, d)
}

/// Log-likelihood of `θ` from `ȳ ~ N(θ, σ0²/n)`.
pub fn known_var_log_likelihood(stat: &NormalSuffStat, sigma0_sq: f64) -> FnLogLikelihood<impl Fn(f64) -> f64> {
    let v = sigma0_sq / stat.n as f64;
    let ybar = stat.ybar;
    FnLogLikelihood::new(move |t| normal_ln_pdf(ybar, t, v), ybar).with_scale(v.sqrt())
}

/// `ln q_n(ȳ)`: density of `N(μ0, τ0² + σ0²/n)` at `ȳ`.
pub fn known_var_log_mixture(stat: &NormalSuffStat, sigma0_sq: f64, weight: &NormalWeight) -> MixtureLogDensity {
    let v = sigma0_sq / stat.n as f64;
    MixtureLogDensity::exact(normal_ln_pdf(stat.ybar, weight.mean(), weight.variance() + v))
}

/// The same region as [`robbins_interval_known_var`], found numerically as a
/// level set of the exact likelihood.
pub fn robbins_region_known_var_numeric(
    stat: &NormalSuffStat,
    sigma0_sq: f64,
    weight: &NormalWeight,
    level: PersistenceLevel,
) -> Result<Region> {
    ensure_positive("sigma0_sq", sigma0_sq)?;
    let ll = known_var_log_likelihood(stat, sigma0_sq);
    engine::robbins_region(&ll, known_var_log_mixture(stat, sigma0_sq, weight), level)
}

/// `ȳ ± σ0 z_{(1+conf)/2} / √n`.
pub fn classical_interval(stat: &NormalSuffStat, sigma0_sq: f64, conf: f64) -> Result<Interval> {
    ensure_positive("sigma0_sq", sigma0_sq)?;
    check_confidence(conf)?;
    let half = sigma0_sq.sqrt() * two_sided_z(conf) / (stat.n as f64).sqrt();
    Interval::symmetric(stat.ybar, half.max(0.0))
}

/// Profile log-likelihood of the mean with the variance maximised out.
pub fn profile_log_likelihood(stat: &NormalSuffStat, mu: f64) -> f64 {
    let n = stat.n as f64;
    let s2 = stat.sigma_hat_sq + (stat.ybar - mu).powi(2);
    -0.5 * n * (LN_2PI + s2.ln()) - 0.5 * n
}

/// `ln q_n(y)` of the whole sample under a normal-inverse-gamma weight.
pub fn nig_log_mixture(stat: &NormalSuffStat, weight: &NormalInverseGamma) -> MixtureLogDensity {
    let n = stat.n as f64;
    let kappa_n = weight.kappa() + n;
    let shape_n = weight.shape() + 0.5 * n;
    let d = stat.ybar - weight.mean();
    let rate_n = weight.rate() + 0.5 * (n * stat.sigma_hat_sq + weight.kappa() * n * d * d / kappa_n);
    MixtureLogDensity::exact(
        -0.5 * n * LN_2PI + 0.5 * (weight.kappa() / kappa_n).ln() + weight.shape() * weight.rate().ln()
            - shape_n * rate_n.ln()
            + ln_gamma(shape_n)
            - ln_gamma(weight.shape()),
    )
}

/// `h_n` of the profile sequence `ȳ ± σ̂ h_n`.
pub fn nig_profile_half_width_factor(
    stat: &NormalSuffStat,
    weight: &NormalInverseGamma,
    level: PersistenceLevel,
) -> Result<f64> {
    ensure_positive("sigma_hat_sq", stat.sigma_hat_sq)?;
    if stat.n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: stat.n as f64,
            reason: "the profile sequence needs at least two observations",
        });
    }
    let n = stat.n as f64;
    let k = level.ln_epsilon() + nig_log_mixture(stat, weight).value + 0.5 * n * LN_2PI + 0.5 * n;
    // exp(−2K/n)/σ̂² − 1, kept in log form for large n
    let excess = (-2.0 * k / n - stat.sigma_hat_sq.ln()).exp_m1();
    Ok(excess.max(0.0).sqrt())
}

/// `ȳ ± σ̂ h_n`, the profile Robbins interval for the mean with unknown
/// variance.
pub fn nig_profile_interval(
    stat: &NormalSuffStat,
    weight: &NormalInverseGamma,
    level: PersistenceLevel,
) -> Result<Interval> {
    let h = nig_profile_half_width_factor(stat, weight, level)?;
    Interval::symmetric(stat.ybar, stat.sigma_hat_sq.sqrt() * h)
}

/// `ȳ ± d_n(σ̂²)`: the Wald-type approximation with `v_n = σ̂²/n`.
pub fn approx_interval_unknown_var(
    stat: &NormalSuffStat,
    weight: &NormalWeight,
    level: PersistenceLevel,
) -> Result<Interval> {
    let d = engine::closed_form_half_width(stat.sigma_hat_sq, stat.n, stat.ybar, weight, level)?;
    Interval::symmetric(stat.ybar, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{integrate_log, level_set, QuadratureOptions, Support};

    fn lvl(e: f64) -> PersistenceLevel {
        PersistenceLevel::new(e).unwrap()
    }

    fn w(m: f64, t: f64) -> NormalWeight {
        NormalWeight::new(m, t).unwrap()
    }

    #[test]
    fn known_variance_reference_values() {
        let st = NormalSuffStat::known_variance(100, 0.0).unwrap();
        let i = robbins_interval_known_var(&st, 1.0, &w(0.0, 1.0), lvl(0.2)).unwrap();
        assert!((i.upper() - 0.280).abs() < 5e-4 && (i.lower() + 0.280).abs() < 5e-4);
        let i = robbins_interval_known_var(&st, 1.0, &w(1.0, 4.0), lvl(0.2)).unwrap();
        assert!((i.upper() - 0.308).abs() < 5e-4);
    }

    #[test]
    fn closed_form_agrees_with_level_set() {
        for (n, ybar, m, t, e) in [
            (100, 0.0, 0.0, 1.0, 0.2),
            (7, 1.3, -2.0, 0.5, 0.05),
            (4000, -0.02, 5.0, 1.0, 0.5),
        ] {
            let st = NormalSuffStat::known_variance(n, ybar).unwrap();
            let cf = robbins_interval_known_var(&st, 1.7, &w(m, t), lvl(e)).unwrap();
            let num = robbins_region_known_var_numeric(&st, 1.7, &w(m, t), lvl(e)).unwrap();
            assert!((cf.lower() - num.interval.lower()).abs() < 1e-7);
            assert!((cf.upper() - num.interval.upper()).abs() < 1e-7);
        }
    }

    #[test]
    fn classical_reference_and_derived() {
        let st = NormalSuffStat::known_variance(100, 0.0).unwrap();
        let i = classical_interval(&st, 1.0, 0.995).unwrap();
        assert!((i.upper() - 0.281).abs() < 5e-4);
        let st = NormalSuffStat::known_variance(400, 1.0).unwrap();
        let i = classical_interval(&st, 4.0, 0.95).unwrap();
        let half = 2.0 * 1.959_964 / 20.0;
        assert!((i.lower() - (1.0 - half)).abs() < 1e-6);
        assert!((i.upper() - (1.0 + half)).abs() < 1e-6);
        // conf → 0 shrinks to the point ȳ
        let i = classical_interval(&st, 4.0, 1e-12).unwrap();
        assert!(i.width() < 1e-10);
        assert!(classical_interval(&st, 4.0, 1.0).is_err());
    }

    #[test]
    fn nig_profile_reference_value_with_zero_prior_mean() {
        let st = NormalSuffStat::new(100, 0.0, 1.0).unwrap();
        let nig = NormalInverseGamma::new(0.0, 8.0, 2.0, 1.0).unwrap();
        let h = nig_profile_half_width_factor(&st, &nig, lvl(0.2)).unwrap();
        assert!((h - 0.323).abs() < 5e-4, "{h}");
        // Same inputs with μ0 = 1 give a wider interval.
        let nig1 = NormalInverseGamma::new(1.0, 8.0, 2.0, 1.0).unwrap();
        let h1 = nig_profile_half_width_factor(&st, &nig1, lvl(0.2)).unwrap();
        assert!((h1 - 0.4333).abs() < 5e-4, "{h1}");
    }

    #[test]
    fn nig_profile_matches_two_dimensional_quadrature() {
        // Oracle: q_n by nested quadrature over (μ, σ²) of the full-data
        // likelihood times the NIG density, then the level set of ℓ_p.
        let st = NormalSuffStat::new(100, 0.0, 1.0).unwrap();
        for nig in [
            NormalInverseGamma::new(1.0, 8.0, 2.0, 1.0).unwrap(),
            NormalInverseGamma::new(0.0, 8.0, 2.0, 1.0).unwrap(),
        ] {
            let n = st.n() as f64;
            let opts = QuadratureOptions {
                rel_tol: 1e-10,
                max_subdivisions: 4000,
            };
            let ln_lik = |mu: f64, s2: f64| {
                -0.5 * n * (LN_2PI + s2.ln()) - (n * st.sigma_hat_sq() + n * (st.ybar() - mu).powi(2)) / (2.0 * s2)
            };
            let inner = |ls2: f64| {
                let s2 = ls2.exp();
                integrate_log(
                    |mu| ln_lik(mu, s2) + nig.ln_pdf(mu, s2),
                    Support::REAL_LINE,
                    st.ybar(),
                    (s2 / n).sqrt(),
                    &opts,
                )
                .unwrap()
                    + ls2
            };
            // ln σ² is concentrated within ±0.5 of 0; ±3 truncates nothing visible.
            let ln_q = integrate_log(inner, Support::new(-3.0, 3.0), 0.0, 0.15, &opts).unwrap();
            let exact = nig_log_mixture(&st, &nig).value;
            assert!((ln_q - exact).abs() < 1e-7, "{ln_q} vs {exact}");

            let ll = FnLogLikelihood::new(|mu| profile_log_likelihood(&st, mu), st.ybar()).with_scale(0.1);
            let region = level_set(&ll, 0.2f64.ln() + ln_q).unwrap();
            let closed = nig_profile_interval(&st, &nig, lvl(0.2)).unwrap();
            assert!((region.interval.upper() - closed.upper()).abs() < 5e-4);
            assert!((region.interval.lower() - closed.lower()).abs() < 5e-4);
        }
    }

    #[test]
    fn nig_interval_widens_as_weight_concentrates_away_from_data() {
        let st = NormalSuffStat::new(100, 0.0, 1.0).unwrap();
        let mut last = 0.0;
        for kappa in [1.0, 8.0, 50.0, 200.0, 1000.0] {
            let nig = NormalInverseGamma::new(1.0, kappa, 2.0, 1.0).unwrap();
            let h = nig_profile_half_width_factor(&st, &nig, lvl(0.2)).unwrap();
            assert!(h > last, "kappa={kappa}: {h} <= {last}");
            last = h;
        }
    }

    #[test]
    fn approx_unknown_variance() {
        let st = NormalSuffStat::new(100, 0.0, 1.0).unwrap();
        let i = approx_interval_unknown_var(&st, &w(0.0, 0.125), lvl(0.2)).unwrap();
        assert!((i.upper() - 0.241).abs() < 5e-4);
        // σ̂² = σ0² reproduces the known-variance interval
        let st = NormalSuffStat::new(37, 0.4, 2.5).unwrap();
        let a = approx_interval_unknown_var(&st, &w(0.1, 3.0), lvl(0.1)).unwrap();
        let k = robbins_interval_known_var(&st, 2.5, &w(0.1, 3.0), lvl(0.1)).unwrap();
        assert_eq!(a, k);
        // Independent arithmetic: n = 30, ȳ = 0.5, σ̂² = 2, N(0,1), ε = 0.05.
        let st = NormalSuffStat::new(30, 0.5, 2.0).unwrap();
        let i = approx_interval_unknown_var(&st, &w(0.0, 1.0), lvl(0.05)).unwrap();
        let v: f64 = 2.0 / 30.0;
        let radicand = ((1.0 + v) / v).ln() + 0.25 / (1.0 + v) - 2.0 * 0.05f64.ln();
        let d = v.sqrt() * radicand.sqrt();
        assert!((i.upper() - (0.5 + d)).abs() < 1e-12);
        assert!((i.lower() - (0.5 - d)).abs() < 1e-12);
        assert!(
            approx_interval_unknown_var(&NormalSuffStat::new(10, 0.0, 0.0).unwrap(), &w(0.0, 1.0), lvl(0.2)).is_err()
        );
    }

    #[test]
    fn bayesian_recast_gives_same_region() {
        // {θ : π(θ|y) ≥ ε π(θ)} with the conjugate normal posterior.
        let (sigma2, e) = (1.3, 0.1f64);
        for (n, ybar, m, t) in [(25u64, 0.4, 0.0, 1.0), (300, -1.2, 2.0, 0.3)] {
            let st = NormalSuffStat::known_variance(n, ybar).unwrap();
            let weight = w(m, t);
            let v = sigma2 / n as f64;
            let post_var = 1.0 / (1.0 / v + 1.0 / t);
            let post_mean = post_var * (ybar / v + m / t);
            let g = FnLogLikelihood::new(move |x| normal_ln_pdf(x, post_mean, post_var) - weight.ln_pdf(x), ybar)
                .with_scale(v.sqrt());
            let recast = level_set(&g, e.ln()).unwrap();
            let direct = robbins_interval_known_var(&st, sigma2, &weight, lvl(e)).unwrap();
            assert!((recast.interval.lower() - direct.lower()).abs() < 1e-9);
            assert!((recast.interval.upper() - direct.upper()).abs() < 1e-9);
        }
    }

    #[test]
    fn half_width_grows_faster_than_root_n() {
        let mut prev = 0.0;
        for n in [10u64, 100, 1_000, 10_000, 100_000, 1_000_000] {
            let st = NormalSuffStat::known_variance(n, 0.0).unwrap();
            let d = robbins_interval_known_var(&st, 1.0, &w(0.0, 1.0), lvl(0.2))
                .unwrap()
                .upper();
            let scaled = d * (n as f64).sqrt();
            assert!(scaled > prev);
            prev = scaled;
        }
        // eventually wider than any fixed-level interval
        let st = NormalSuffStat::known_variance(1_000_000, 0.0).unwrap();
        let r = robbins_interval_known_var(&st, 1.0, &w(0.0, 1.0), lvl(0.2)).unwrap();
        let c = classical_interval(&st, 1.0, 0.999).unwrap();
        assert!(r.width() > c.width());
    }
}
