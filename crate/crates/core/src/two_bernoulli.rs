//! Log-odds ratio of two Bernoulli populations.
//!
//! Conditioning on the total `t = s1 + s2` removes the nuisance parameter:
//! `S1 | t` follows Fisher's noncentral hypergeometric law with log odds
//! ratio `ψ`. The exact sequence mixes that conditional likelihood over the
//! log-odds density induced by two independent `Beta(½, ½)` weights; the
//! approximate one is the closed-form normal sequence applied to the
//! continuity-corrected `ψ̂` and its variance estimate.

use serde::{Deserialize, Serialize};

use crate::engine::{self, FnLogLikelihood, Region, Support};
use crate::error::{Error, Result};
use crate::interval::{check_confidence, Interval, PersistenceLevel};
use crate::special::{ln_choose, log_sum_exp, two_sided_z};
use crate::weight::{LogOddsWeight, NormalWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSampleStat {
    n1: u64,
    n2: u64,
    s1: u64,
    s2: u64,
}

impl TwoSampleStat {
    pub fn new(n1: u64, n2: u64, s1: u64, s2: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter {
                name: "n1/n2",
                value: 0.0,
                reason: "both samples need at least one observation",
            });
        }
        if s1 > n1 {
            return Err(Error::InvalidParameter {
                name: "s1",
                value: s1 as f64,
                reason: "successes cannot exceed n1",
            });
        }
        if s2 > n2 {
            return Err(Error::InvalidParameter {
                name: "s2",
                value: s2 as f64,
                reason: "successes cannot exceed n2",
            });
        }
        Ok(Self { n1, n2, s1, s2 })
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }
    pub fn n2(&self) -> u64 {
        self.n2
    }
    pub fn s1(&self) -> u64 {
        self.s1
    }
    pub fn s2(&self) -> u64 {
        self.s2
    }

    pub fn total(&self) -> u64 {
        self.s1 + self.s2
    }

    /// Samples exchanged; the log odds ratio changes sign.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            s1: self.s2,
            s2: self.s1,
        }
    }
}

/// Conditional law of `S1` given `S1 + S2 = t`.
#[derive(Debug, Clone)]
pub struct NoncentralHypergeometric {
    lo: u64,
    /// `ln C(n1,u) + ln C(n2,t−u)` for `u = lo..=hi`.
    ln_coef: Vec<f64>,
}

impl NoncentralHypergeometric {
    pub fn new(n1: u64, n2: u64, t: u64) -> Result<Self> {
        if t > n1 + n2 {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t as f64,
                reason: "total exceeds n1 + n2",
            });
        }
        let lo = t.saturating_sub(n2);
        let hi = n1.min(t);
        let ln_coef = (lo..=hi).map(|u| ln_choose(n1, u) + ln_choose(n2, t - u)).collect();
        Ok(Self { lo, ln_coef })
    }

    pub fn support(&self) -> (u64, u64) {
        (self.lo, self.lo + self.ln_coef.len() as u64 - 1)
    }

    pub fn is_degenerate(&self) -> bool {
        self.ln_coef.len() == 1
    }

    fn ln_norm(&self, psi: f64) -> f64 {
        let terms: Vec<f64> = self
            .ln_coef
            .iter()
            .enumerate()
            .map(|(i, c)| c + psi * (self.lo + i as u64) as f64)
            .collect();
        log_sum_exp(&terms)
    }

    pub fn ln_pmf(&self, s1: u64, psi: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if s1 < lo || s1 > hi {
            return Err(Error::Support { s1, lo, hi });
        }
        Ok(self.ln_coef[(s1 - lo) as usize] + psi * s1 as f64 - self.ln_norm(psi))
    }

    /// `(E_ψ[S1], Var_ψ[S1])`.
    pub fn moments(&self, psi: f64) -> (f64, f64) {
        let ln_z = self.ln_norm(psi);
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, c) in self.ln_coef.iter().enumerate() {
            let u = (self.lo + i as u64) as f64;
            let p = (c + psi * u - ln_z).exp();
            m1 += p * u;
            m2 += p * u * u;
        }
        (m1, (m2 - m1 * m1).max(0.0))
    }

    /// Conditional MLE of `ψ`: the root of `E_ψ[S1] = s1`, by bisection.
    /// `None` when `s1` sits on the edge of the support (the MLE is ±∞).
    pub fn mle(&self, s1: u64) -> Option<f64> {
        let (lo, hi) = self.support();
        if s1 <= lo || s1 >= hi {
            return None;
        }
        let target = s1 as f64;
        let (mut a, mut b) = (-1.0, 1.0);
        while self.moments(a).0 > target {
            a *= 2.0;
        }
        while self.moments(b).0 < target {
            b *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if self.moments(mid).0 < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// `ln P_ψ(S1 = s1 | S1 + S2 = t)` for samples of sizes `n1`, `n2`.
pub fn fnch_log_pmf(s1: u64, n1: u64, n2: u64, t: u64, psi: f64) -> Result<f64> {
    NoncentralHypergeometric::new(n1, n2, t)?.ln_pmf(s1, psi)
}

/// Conditional log-likelihood of `ψ` as a [`LogLikelihood`].
pub fn conditional_log_likelihood(stat: &TwoSampleStat) -> Result<FnLogLikelihood<impl Fn(f64) -> f64>> {
    let dist = NoncentralHypergeometric::new(stat.n1, stat.n2, stat.total())?;
    let mle = dist.mle(stat.s1).ok_or(Error::UnboundedRegion)?;
    let info = dist.moments(mle).1;
    let s1 = stat.s1;
    Ok(
        FnLogLikelihood::new(move |psi| dist.ln_pmf(s1, psi).unwrap_or(f64::NEG_INFINITY), mle)
            .with_scale(info.sqrt().recip()),
    )
}

/// Exact conditional Robbins region for `ψ` with the log-odds weight.
///
/// Fails with [`Error::UnboundedRegion`] when the conditional likelihood is
/// flat (`t ∈ {0, n1+n2}`) or monotone (`s1` on the edge of its support).
pub fn robbins_conditional_region(stat: &TwoSampleStat, level: PersistenceLevel) -> Result<Region> {
    let ll = conditional_log_likelihood(stat)?;
    let weight = LogOddsWeight;
    let q = engine::quadrature_log_mixture(&ll, |psi| weight.ln_pdf(psi), Support::REAL_LINE)?;
    engine::robbins_region(&ll, q, level)
}

pub fn robbins_conditional_interval(stat: &TwoSampleStat, level: PersistenceLevel) -> Result<Interval> {
    robbins_conditional_region(stat, level).map(|r| r.interval)
}

/// Continuity-corrected `(ψ̂, v_n)`.
pub fn continuity_corrected_estimates(stat: &TwoSampleStat) -> (f64, f64) {
    continuity_corrected_estimates_raw(stat.n1, stat.n2, stat.s1, stat.s2)
}

#[inline]
pub(crate) fn continuity_corrected_estimates_raw(n1: u64, n2: u64, s1: u64, s2: u64) -> (f64, f64) {
    let a = s1 as f64 + 0.5;
    let b = (n1 - s1) as f64 + 0.5;
    let c = s2 as f64 + 0.5;
    let d = (n2 - s2) as f64 + 0.5;
    ((a * d / (b * c)).ln(), a.recip() + b.recip() + c.recip() + d.recip())
}

/// `ψ̂ ± d_n` with the closed-form half-width at estimator variance `v_n`.
pub fn approx_interval_log_odds(
    stat: &TwoSampleStat,
    weight: &NormalWeight,
    level: PersistenceLevel,
) -> Result<Interval> {
    let (psi, v) = continuity_corrected_estimates(stat);
    let n = stat.n1 + stat.n2;
    let d = engine::closed_form_half_width(n as f64 * v, n, psi, weight, level)?;
    Interval::symmetric(psi, d)
}

/// Wald interval `ψ̂ ± z_{(1+conf)/2} √v_n`.
pub fn wald_interval(stat: &TwoSampleStat, conf: f64) -> Result<Interval> {
    check_confidence(conf)?;
    let (psi, v) = continuity_corrected_estimates(stat);
    Interval::symmetric(psi, two_sided_z(conf) * v.sqrt())
}

/// `ln[θ1(1−θ2) / (θ2(1−θ1))]`.
pub fn log_odds_ratio(theta1: f64, theta2: f64) -> f64 {
    (theta1 * (1.0 - theta2) / (theta2 * (1.0 - theta1))).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::LogLikelihood;
    use num_rational::Ratio;

    fn lvl(e: f64) -> PersistenceLevel {
        PersistenceLevel::new(e).unwrap()
    }

    fn stat(n1: u64, n2: u64, s1: u64, s2: u64) -> TwoSampleStat {
        TwoSampleStat::new(n1, n2, s1, s2).unwrap()
    }

    #[test]
    fn central_case() {
        let p = fnch_log_pmf(1, 2, 2, 2, 0.0).unwrap().exp();
        assert!((p - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn pmf_is_normalised() {
        for (n1, n2, t, psi) in [(5, 7, 6, 0.3), (30, 70, 50, 0.95), (12, 3, 4, -2.5), (40, 40, 1, 8.0)] {
            let d = NoncentralHypergeometric::new(n1, n2, t).unwrap();
            let (lo, hi) = d.support();
            let total: f64 = (lo..=hi).map(|u| d.ln_pmf(u, psi).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_matches_exact_rational_enumeration() {
        // n1 = 3, n2 = 4, t = 3, ψ = ln 2: weights C(3,u) C(4,3−u) 2^u.
        let binom = |n: i64, k: i64| -> i64 { (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1)) };
        let weights: Vec<Ratio<i64>> = (0..=3)
            .map(|u| Ratio::from_integer(binom(3, u) * binom(4, 3 - u) * (1 << u)))
            .collect();
        let total: Ratio<i64> = weights.iter().sum();
        for u in 0..=3u64 {
            let exact = weights[u as usize] / total;
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            let p = fnch_log_pmf(u, 3, 4, 3, 2f64.ln()).unwrap().exp();
            assert!((p - exact).abs() < 1e-14, "u={u}: {p} vs {exact}");
        }
    }

    #[test]
    fn out_of_support_is_error() {
        assert!(matches!(fnch_log_pmf(5, 3, 4, 3, 0.0), Err(Error::Support { .. })));
        // t − n2 lower bound
        assert!(matches!(
            fnch_log_pmf(0, 3, 2, 4, 0.0),
            Err(Error::Support { lo: 2, .. })
        ));
    }

    #[test]
    fn log_odds_density_integrates_to_one_with_variance_two_pi_squared() {
        use crate::engine::{integrate_log, QuadratureOptions};
        let w = LogOddsWeight;
        let opts = QuadratureOptions::default();
        let d = Support::new(-60.0, 60.0);
        let mass = integrate_log(|x| w.ln_pdf(x), d, 0.0, 2.0, &opts).unwrap().exp();
        let second = integrate_log(|x| 2.0 * x.abs().ln() + w.ln_pdf(x), d, 0.0, 2.0, &opts)
            .unwrap()
            .exp();
        assert!((mass - 1.0).abs() < 1e-8);
        let (_, var) = w.moments();
        assert!((second - var).abs() < 1e-6 * var, "{second} vs {var}");
    }

    #[test]
    fn quadrature_mixture_matches_trapezoid() {
        let s = stat(30, 70, 20, 30);
        let ll = conditional_log_likelihood(&s).unwrap();
        let w = LogOddsWeight;
        let q = engine::quadrature_log_mixture(&ll, |p| w.ln_pdf(p), Support::REAL_LINE).unwrap();
        let m = 20_000;
        let (a, b) = (-40.0, 40.0);
        let h = (b - a) / m as f64;
        let f = |x: f64| (ll.ln_lik(x) + w.ln_pdf(x)).exp();
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..m {
            acc += f(a + i as f64 * h);
        }
        let trap = (acc * h).ln();
        assert!((q.value - trap).abs() < 1e-7, "{} vs {trap}", q.value);
    }

    #[test]
    fn conditional_interval_agrees_with_grid_scan() {
        // n1 = n2 = 10, s1 = 7, s2 = 3, ε = 0.5. Oracle: trapezoid q and a
        // ψ-grid scan with step 1e-4.
        let s = stat(10, 10, 7, 3);
        let dist = NoncentralHypergeometric::new(10, 10, 10).unwrap();
        let w = LogOddsWeight;
        let l = |p: f64| dist.ln_pmf(7, p).unwrap();
        let m = 200_000;
        let (a, b) = (-40.0, 40.0);
        let h = (b - a) / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let x = a + i as f64 * h;
            let wt = if i == 0 || i == m { 0.5 } else { 1.0 };
            acc += wt * (l(x) + w.ln_pdf(x)).exp();
        }
        let thr = 0.5f64.ln() + (acc * h).ln();
        let (mut lo, mut hi) = (f64::NAN, f64::NAN);
        for i in 0..=200_000 {
            let x = -10.0 + i as f64 * 1e-4;
            if l(x) >= thr {
                if lo.is_nan() {
                    lo = x;
                }
                hi = x;
            }
        }
        let i = robbins_conditional_interval(&s, lvl(0.5)).unwrap();
        assert!(
            (i.lower() - lo).abs() < 1.5e-4 && (i.upper() - hi).abs() < 1.5e-4,
            "{i} vs [{lo}, {hi}]"
        );
    }

    #[test]
    fn symmetric_data_give_symmetric_interval() {
        let i = robbins_conditional_interval(&stat(25, 25, 9, 9), lvl(0.2)).unwrap();
        assert!((i.lower() + i.upper()).abs() < 1e-7, "{i}");
    }

    #[test]
    fn degenerate_total_is_unbounded() {
        assert_eq!(
            robbins_conditional_interval(&stat(5, 5, 0, 0), lvl(0.2)),
            Err(Error::UnboundedRegion)
        );
        assert_eq!(
            robbins_conditional_interval(&stat(5, 5, 5, 5), lvl(0.2)),
            Err(Error::UnboundedRegion)
        );
        assert!(NoncentralHypergeometric::new(5, 5, 0).unwrap().is_degenerate());
    }

    #[test]
    fn continuity_corrected_values() {
        let (psi, v) = continuity_corrected_estimates(&stat(30, 70, 20, 30));
        assert!((psi - 0.9526).abs() < 1e-4 && (v - 0.2015).abs() < 1e-4);
        let z = two_sided_z(0.995);
        assert!((psi - z * v.sqrt() - -0.307).abs() < 5e-4);
        assert!((psi + z * v.sqrt() - 2.213).abs() < 5e-4);
        assert_eq!(continuity_corrected_estimates(&stat(12, 12, 6, 6)).0, 0.0);
        let (p, v) = continuity_corrected_estimates(&stat(10, 10, 0, 10));
        assert!(p.is_finite() && v.is_finite() && v > 0.0);
    }

    #[test]
    fn approx_reference_intervals() {
        let s = stat(30, 70, 20, 30);
        let two_pi2 = 2.0 * std::f64::consts::PI.powi(2);
        for ((m, t), (lo, hi)) in [((0.0, two_pi2), (-0.306, 2.211)), ((0.0, 1.0), (-0.125, 2.030))] {
            let i = approx_interval_log_odds(&s, &NormalWeight::new(m, t).unwrap(), lvl(0.2)).unwrap();
            assert!((i.lower() - lo).abs() <= 1e-3 && (i.upper() - hi).abs() <= 1e-3, "{i}");
        }
    }

    #[test]
    fn approx_agrees_with_local_formula() {
        let s = stat(17, 23, 4, 15);
        let weight = NormalWeight::new(0.3, 2.0).unwrap();
        let i = approx_interval_log_odds(&s, &weight, lvl(0.1)).unwrap();
        let (psi, v) = continuity_corrected_estimates(&s);
        let d = (v * (((2.0 + v) / v).ln() + (psi - 0.3).powi(2) / (2.0 + v) - 2.0 * 0.1f64.ln())).sqrt();
        assert!((i.upper() - (psi + d)).abs() < 1e-12);
        assert!((i.lower() - (psi - d)).abs() < 1e-12);
    }

    #[test]
    fn true_log_odds_of_simulation_setting() {
        assert!((log_odds_ratio(0.2, 0.25) - (-0.288)).abs() < 5e-4);
    }
}
