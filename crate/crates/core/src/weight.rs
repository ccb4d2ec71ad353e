//! Preset weight (mixing) densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Result};
use crate::special::{ln_beta, normal_ln_pdf, xlogy};

/// `N(mean, variance)` weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalWeight {
    mean: f64,
    variance: f64,
}

impl NormalWeight {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        Ok(Self {
            mean: ensure_finite("mu0", mean)?,
            variance: ensure_positive("tau0_sq", variance)?,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        normal_ln_pdf(x, self.mean, self.variance)
    }
}

/// `Beta(alpha, beta)` weight on a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaWeight {
    alpha: f64,
    beta: f64,
}

impl BetaWeight {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha: ensure_positive("alpha", alpha)?,
            beta: ensure_positive("beta", beta)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mirror image `Beta(beta, alpha)`.
    pub fn reflected(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    pub fn ln_pdf(&self, theta: f64) -> f64 {
        if !(0.0..=1.0).contains(&theta) {
            return f64::NEG_INFINITY;
        }
        xlogy(self.alpha - 1.0, theta) + xlogy(self.beta - 1.0, 1.0 - theta) - ln_beta(self.alpha, self.beta)
    }
}

/// Normal-inverse-gamma weight on `(μ, σ²)`: `1/σ² ~ Gamma(shape, rate)` and
/// `μ | σ² ~ N(mean, σ²/kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalInverseGamma {
    mean: f64,
    kappa: f64,
    shape: f64,
    rate: f64,
}

impl NormalInverseGamma {
    pub fn new(mean: f64, kappa: f64, shape: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            mean: ensure_finite("mu0", mean)?,
            kappa: ensure_positive("kappa0", kappa)?,
            shape: ensure_positive("alpha0", shape)?,
            rate: ensure_positive("beta0", rate)?,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Joint log density at `(mu, sigma_sq)`.
    pub fn ln_pdf(&self, mu: f64, sigma_sq: f64) -> f64 {
        if sigma_sq <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let a = self.shape;
        let b = self.rate;
        // inverse-gamma density of sigma_sq
        let ln_ig = a * b.ln() - crate::special::ln_gamma(a) - (a + 1.0) * sigma_sq.ln() - b / sigma_sq;
        ln_ig + normal_ln_pdf(mu, self.mean, sigma_sq / self.kappa)
    }

    /// Variance of the marginal (Student) law of `μ`; requires `shape > 1`.
    pub fn marginal_mean_variance(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.rate / (self.kappa * (self.shape - 1.0)))
    }
}

/// Density of the log-odds ratio `ψ` when both success probabilities are
/// independent `Beta(1/2, 1/2)`:
/// `π(ψ) = ψ e^{ψ/2} / (π² (e^ψ − 1))`, with `π(0) = 1/π²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogOddsWeight;

impl LogOddsWeight {
    pub fn pdf(&self, psi: f64) -> f64 {
        self.ln_pdf(psi).exp()
    }

    /// Evaluated as `ln[(x / sinh x)] − 2 ln π` with `x = ψ/2`, which is the
    /// same expression without the overflow of `e^ψ`.
    pub fn ln_pdf(&self, psi: f64) -> f64 {
        let x = 0.5 * psi.abs();
        let ln_ratio = if x < 1e-6 {
            // x/sinh x = 1 − x²/6 + 7x⁴/360 − …
            let x2 = x * x;
            (1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0).ln()
        } else if x < 20.0 {
            (x / x.sinh()).ln()
        } else {
            // sinh x = e^x (1 − e^{−2x}) / 2
            x.ln() + std::f64::consts::LN_2 - x - (-(-2.0 * x).exp()).ln_1p()
        };
        ln_ratio - 2.0 * PI.ln()
    }

    /// Mean and variance of the density: `(0, 2π²)`.
    pub fn moments(&self) -> (f64, f64) {
        (0.0, 2.0 * PI * PI)
    }
}

/// Any of the supported weight families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightSpec {
    Normal(NormalWeight),
    Beta(BetaWeight),
    NormalInverseGamma(NormalInverseGamma),
    LogOdds(LogOddsWeight),
}

impl From<NormalWeight> for WeightSpec {
    fn from(w: NormalWeight) -> Self {
        WeightSpec::Normal(w)
    }
}

impl From<BetaWeight> for WeightSpec {
    fn from(w: BetaWeight) -> Self {
        WeightSpec::Beta(w)
    }
}

impl From<NormalInverseGamma> for WeightSpec {
    fn from(w: NormalInverseGamma) -> Self {
        WeightSpec::NormalInverseGamma(w)
    }
}

impl From<LogOddsWeight> for WeightSpec {
    fn from(w: LogOddsWeight) -> Self {
        WeightSpec::LogOdds(w)
    }
}

impl std::fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightSpec::Normal(w) => write!(f, "normal:{},{}", w.mean, w.variance),
            WeightSpec::Beta(w) => write!(f, "beta:{},{}", w.alpha, w.beta),
            WeightSpec::NormalInverseGamma(w) => {
                write!(f, "nig:{},{},{},{}", w.mean, w.kappa, w.shape, w.rate)
            }
            WeightSpec::LogOdds(_) => f.write_str("logodds"),
        }
    }
}

impl std::str::FromStr for WeightSpec {
    type Err = String;

    /// Parses `family:p1,p2[,p3,p4]`, e.g. `normal:0,1`, `beta:0.5,0.5`,
    /// `nig:1,8,2,1` or `logodds`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (family, params) = match s.split_once(':') {
            Some((f, p)) => (f.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let values: Vec<f64> = if params.is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("bad weight parameter `{p}`: {e}"))
                })
                .collect::<std::result::Result<_, _>>()?
        };
        let arity = |n: usize| {
            if values.len() == n {
                Ok(())
            } else {
                Err(format!(
                    "weight family `{family}` takes {n} parameter(s), got {}",
                    values.len()
                ))
            }
        };
        let spec = match family {
            "normal" => {
                arity(2)?;
                NormalWeight::new(values[0], values[1]).map(WeightSpec::from)
            }
            "beta" => {
                arity(2)?;
                BetaWeight::new(values[0], values[1]).map(WeightSpec::from)
            }
            "nig" => {
                arity(4)?;
                NormalInverseGamma::new(values[0], values[1], values[2], values[3]).map(WeightSpec::from)
            }
            "logodds" => {
                arity(0)?;
                Ok(WeightSpec::LogOdds(LogOddsWeight))
            }
            other => return Err(format!("unknown weight family `{other}`")),
        };
        spec.map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_odds_density_at_zero_and_symmetry() {
        let w = LogOddsWeight;
        assert!((w.pdf(0.0) - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!((w.pdf(0.0) - 0.101_321).abs() < 1e-6);
        for psi in [0.5, 1.0, 5.0] {
            assert_eq!(w.pdf(psi), w.pdf(-psi));
        }
        // direct formula away from zero
        let psi: f64 = 1.3;
        let direct = psi * (psi / 2.0).exp() / (PI * PI * (psi.exp() - 1.0));
        assert!((w.pdf(psi) - direct).abs() < 1e-15);
        // continuity across the series switch
        assert!((w.pdf(1e-6) - w.pdf(1.0001e-6)).abs() < 1e-14);
        assert!((w.ln_pdf(40.0) - (20f64 / 20f64.sinh()).ln() + 2.0 * PI.ln()).abs() < 1e-12);
        assert!(w.ln_pdf(2000.0).is_finite());
    }

    #[test]
    fn parses_weight_specs() {
        assert_eq!(
            "normal:0,1".parse::<WeightSpec>().unwrap(),
            WeightSpec::Normal(NormalWeight::new(0.0, 1.0).unwrap())
        );
        assert_eq!(
            "beta:0.5, 0.5".parse::<WeightSpec>().unwrap(),
            WeightSpec::Beta(BetaWeight::new(0.5, 0.5).unwrap())
        );
        assert!(matches!(
            "nig:1,8,2,1".parse::<WeightSpec>().unwrap(),
            WeightSpec::NormalInverseGamma(_)
        ));
        assert_eq!(
            "logodds".parse::<WeightSpec>().unwrap(),
            WeightSpec::LogOdds(LogOddsWeight)
        );
        assert!("normal:0,-1".parse::<WeightSpec>().is_err());
        assert!("beta:1".parse::<WeightSpec>().is_err());
        assert!("cauchy:0,1".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn beta_density_uniform() {
        let w = BetaWeight::new(1.0, 1.0).unwrap();
        assert!(w.ln_pdf(0.3).abs() < 1e-14);
        assert_eq!(w.ln_pdf(1.5), f64::NEG_INFINITY);
    }
}
