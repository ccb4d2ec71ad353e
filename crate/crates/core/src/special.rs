//! Log-space special functions shared by the models.

use statrs::distribution::{ContinuousCDF, Normal};

pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)` via log-gamma.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided standard normal critical value `z_{(1+conf)/2}`.
pub fn two_sided_z(conf: f64) -> f64 {
    normal_quantile(0.5 * (1.0 + conf))
}

/// Quantile of the chi-square distribution with one degree of freedom.
pub fn chi2_1_quantile(p: f64) -> f64 {
    let z = normal_quantile(0.5 * (1.0 + p));
    z * z
}

pub fn normal_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln() + d * d / variance)
}

/// `ln Σ exp(x_i)` with the max-shift trick. Empty input gives `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `a·ln(x)` with the convention `0·ln(0) = 0`.
#[inline]
pub(crate) fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_match_tabulated_values() {
        assert!((two_sided_z(0.95) - 1.959_963_984_540_054).abs() < 1e-10);
        assert!((two_sided_z(0.995) - 2.807_033_768_343_811).abs() < 1e-10);
        assert!((chi2_1_quantile(0.95) - 3.841_458_820_694_124).abs() < 1e-9);
    }

    #[test]
    fn ln_choose_small() {
        assert!((ln_choose(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_choose(5, 0), 0.0);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
