use serde::{Deserialize, Serialize};

use super::{LogLikelihood, MixtureLogDensity};
use crate::error::{Error, Result, Side};
use crate::interval::{Interval, PersistenceLevel};

/// A superlevel set `{θ : ℓ(θ) ≥ threshold}` of a concave log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub interval: Interval,
    /// The level `ln ε + ln q_n` (or any other cut) defining the set.
    pub threshold: f64,
    /// The set reaches the lower end of the parameter domain.
    pub lower_truncated: bool,
    pub upper_truncated: bool,
}

/// Robbins region `{θ : p_n(y; θ) ≥ ε q_n(y)}`, solved as the level set
/// `ℓ(θ) ≥ ln ε + ln q_n`.
pub fn robbins_region<L: LogLikelihood>(
    loglik: &L,
    log_qn: MixtureLogDensity,
    level: PersistenceLevel,
) -> Result<Region> {
    level_set(loglik, level.ln_epsilon() + log_qn.value)
}

/// Superlevel set of a concave log-likelihood.
///
/// Each endpoint is bracketed by stepping away from the maximiser with
/// doubling steps and then bisected down to adjacent floating point values,
/// returning the point on the inside of the set. Sets that reach a finite
/// end of the support are clipped there and flagged as truncated.
pub fn level_set<L: LogLikelihood>(loglik: &L, threshold: f64) -> Result<Region> {
    let mle = loglik.mle();
    let max = loglik.max_ln_lik();
    if !threshold.is_finite() && threshold != f64::NEG_INFINITY {
        return Err(Error::InvalidParameter {
            name: "threshold",
            value: threshold,
            reason: "must not be NaN or +inf",
        });
    }
    if threshold > max {
        // Rounding of an exact q_n can push the cut a few ulps above the
        // maximum; that is the degenerate set {θ̂}.
        if threshold - max <= 1e-12 * (1.0 + max.abs()) {
            return Ok(Region {
                interval: Interval::point(mle)?,
                threshold,
                lower_truncated: false,
                upper_truncated: false,
            });
        }
        return Err(Error::ThresholdAboveMax { threshold, max });
    }
    let (lower, lower_truncated) = endpoint(loglik, threshold, Side::Lower)?;
    let (upper, upper_truncated) = endpoint(loglik, threshold, Side::Upper)?;
    Ok(Region {
        interval: Interval::new(lower, upper)?,
        threshold,
        lower_truncated,
        upper_truncated,
    })
}

fn endpoint<L: LogLikelihood>(loglik: &L, threshold: f64, side: Side) -> Result<(f64, bool)> {
    let support = loglik.support();
    let mle = loglik.mle();
    let (dir, boundary) = match side {
        Side::Lower => (-1.0, support.lo),
        Side::Upper => (1.0, support.hi),
    };
    if mle == boundary {
        return Ok((boundary, true));
    }
    let inside_at = |x: f64| {
        let v = loglik.ln_lik(x);
        v >= threshold
    };

    let mut step = loglik
        .scale_hint()
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(1e-3 * mle.abs().max(1.0));
    if boundary.is_finite() {
        step = step.min(0.5 * (boundary - mle).abs());
    }
    let mut inside = mle;
    let outside = loop {
        let mut x = mle + dir * step;
        let past_boundary = if dir < 0.0 { x <= boundary } else { x >= boundary };
        if boundary.is_finite() && past_boundary {
            x = boundary;
        }
        if inside_at(x) {
            if x == boundary {
                return Ok((boundary, true));
            }
            inside = x;
            step *= 2.0;
            if !step.is_finite() || step > 1e300 {
                return Err(Error::NoBracket { side });
            }
        } else {
            break x;
        }
    };
    Ok((bisect_crossing(inside_at, inside, outside), false))
}

/// Bisects between a point inside a set (`pred` true) and one outside it
/// until the two are adjacent floats, returning the inside point.
pub(crate) fn bisect_crossing(pred: impl Fn(f64) -> bool, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FnLogLikelihood, Support};
    use crate::special::{ln_beta, normal_ln_pdf, xlogy};

    #[test]
    fn normal_exact_region_matches_reference_half_width() {
        // ȳ = 0, n = 100, σ0² = 1, weight N(0, 1), ε = 0.2
        let v = 1.0 / 100.0;
        let ll = FnLogLikelihood::new(move |t: f64| normal_ln_pdf(0.0, t, v), 0.0).with_scale(0.1);
        let q = MixtureLogDensity::exact(normal_ln_pdf(0.0, 0.0, 1.0 + v));
        let r = robbins_region(&ll, q, PersistenceLevel::new(0.2).unwrap()).unwrap();
        assert!((r.interval.upper() - 0.280).abs() < 5e-4);
        assert!((r.interval.lower() + 0.280).abs() < 5e-4);
        assert!(!r.lower_truncated && !r.upper_truncated);
    }

    #[test]
    fn threshold_at_maximum_gives_point() {
        let ll = FnLogLikelihood::new(|t: f64| -(t - 1.5).powi(2), 1.5);
        let r = level_set(&ll, 0.0).unwrap();
        assert_eq!(r.interval.lower(), 1.5);
        assert_eq!(r.interval.upper(), 1.5);
    }

    #[test]
    fn threshold_above_maximum_is_error() {
        let ll = FnLogLikelihood::new(|t: f64| -(t * t), 0.0);
        assert!(matches!(level_set(&ll, 0.1), Err(Error::ThresholdAboveMax { .. })));
    }

    #[test]
    fn flat_likelihood_on_real_line_cannot_be_bracketed() {
        let ll = FnLogLikelihood::new(|_t: f64| 0.0, 0.0);
        assert!(matches!(level_set(&ll, -1.0), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn bernoulli_region_matches_grid_scan() {
        // n = 20, s = 7, Beta(1,1), ε = 0.5. Oracle: scan (0,1) in steps of 1e-6.
        let (n, s) = (20.0, 7.0);
        let ll_fn = move |t: f64| xlogy(s, t) + xlogy(n - s, 1.0 - t);
        let thr = 0.5f64.ln() + ln_beta(s + 1.0, n - s + 1.0) - ln_beta(1.0, 1.0);
        let mut lo = f64::NAN;
        let mut hi = f64::NAN;
        let steps = 1_000_000;
        for i in 1..steps {
            let t = i as f64 / steps as f64;
            if ll_fn(t) >= thr {
                if lo.is_nan() {
                    lo = t;
                }
                hi = t;
            }
        }
        let ll = FnLogLikelihood::new(ll_fn, s / n).with_support(Support::UNIT);
        let q = MixtureLogDensity::exact(ln_beta(s + 1.0, n - s + 1.0));
        let r = robbins_region(&ll, q, PersistenceLevel::new(0.5).unwrap()).unwrap();
        assert!((r.interval.lower() - lo).abs() < 1e-6, "{} vs {lo}", r.interval.lower());
        assert!((r.interval.upper() - hi).abs() < 1e-6, "{} vs {hi}", r.interval.upper());
        for x in [r.interval.lower(), r.interval.upper()] {
            assert!((ll_fn(x) - thr).abs() < 1e-7);
        }
    }

    #[test]
    fn region_truncated_at_domain_boundary() {
        // s = 0: likelihood (1-θ)^n is maximal at θ = 0.
        let n = 10.0;
        let ll = FnLogLikelihood::new(move |t: f64| xlogy(n, 1.0 - t), 0.0).with_support(Support::UNIT);
        let r = level_set(&ll, -1.0).unwrap();
        assert!(r.lower_truncated);
        assert_eq!(r.interval.lower(), 0.0);
        let expected = 1.0 - (-1.0f64 / n).exp();
        assert!((r.interval.upper() - expected).abs() < 1e-12);
    }
}
