//! Per-rule state carried along one simulated sequence.
//!
//! Only the running extremes of the endpoints matter to the monitor, so the
//! Bernoulli level-set rules skip work that cannot move them: a new lower
//! endpoint can raise the running maximum `L` only if `L` lies left of the
//! current region, i.e. `L < θ̂` and `ℓ(L) < c_n`. Concavity of `ℓ` makes
//! that test exact; when it passes, the endpoint is solved for inside the
//! bracket `[L, θ̂]`, which is the warm start from earlier steps. The upper
//! side is symmetric. The solver is a safeguarded Newton iteration: started
//! at the outer end of a concave function it approaches the crossing
//! monotonically.

use crate::bernoulli::{kernel_ln_lik, omega, omega_inverse};
use crate::engine::half_width_unchecked;
use crate::error::{Error, Result};
use crate::interval::{check_confidence, PersistenceLevel};
use crate::monitor::SequenceMonitor;
use crate::special::{chi2_1_quantile, two_sided_z};
use crate::two_bernoulli::continuity_corrected_estimates_raw;
use crate::weight::{BetaWeight, NormalWeight, WeightSpec};

use super::{IntervalRule, ModelTruth};

/// Sufficient statistics after `n` steps.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Running {
    pub n: u64,
    pub sum: f64,
    pub s1: u64,
    pub s2: u64,
    /// Outcome of the latest Bernoulli draw.
    pub last: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Slot {
    tracker: Tracker,
    pub monitor: SequenceMonitor,
}

#[derive(Debug, Clone)]
enum Tracker {
    /// `ȳ ± (z σ0)/√n`.
    NormalZ {
        z_sigma: f64,
    },
    NormalClosed {
        sigma0_sq: f64,
        weight: NormalWeight,
        ln_eps: f64,
    },
    Wald {
        z: f64,
    },
    LogOddsApprox {
        weight: NormalWeight,
        ln_eps: f64,
    },
    Arcsine {
        weight: NormalWeight,
        ln_eps: f64,
    },
    Level(LevelSet),
}

#[derive(Debug, Clone)]
enum Threshold {
    /// `c_n = ℓ(θ̂) − χ²/2`.
    Ratio { half_chi2: f64 },
    /// `c_n = ln ε + ln B(s+α, n−s+β) − ln B(α, β)`, accumulated one
    /// predictive factor per observation.
    Mixture {
        ln_eps: f64,
        alpha: f64,
        beta: f64,
        ln_marginal: f64,
    },
}

#[derive(Debug, Clone)]
struct LevelSet {
    threshold: Threshold,
    /// `(ln L, ln(1 − L))` at the running maximum lower endpoint.
    lower_logs: (f64, f64),
    upper_logs: (f64, f64),
}

fn normal_weight(spec: &WeightSpec) -> Option<NormalWeight> {
    match spec {
        WeightSpec::Normal(w) => NormalWeight::new(w.mean(), w.variance()).ok(),
        _ => None,
    }
}

fn beta_weight(spec: &WeightSpec) -> Option<BetaWeight> {
    match spec {
        WeightSpec::Beta(w) => BetaWeight::new(w.alpha(), w.beta()).ok(),
        _ => None,
    }
}

impl Slot {
    pub fn compile(model: &ModelTruth, rule: &IntervalRule, truth: f64) -> Result<Self> {
        let unsupported = || {
            Error::InvalidPlan(format!(
                "rule {} with weight {} is not available for the {} model",
                rule_name(rule),
                rule_weight(rule),
                model_name(model)
            ))
        };
        let tracker = match (*model, *rule) {
            (ModelTruth::NormalKnownVar { sigma0_sq, .. }, IntervalRule::ClassicalZ { conf }) => Tracker::NormalZ {
                z_sigma: two_sided_z(check_confidence(conf)?) * sigma0_sq.sqrt(),
            },
            (
                ModelTruth::NormalKnownVar { sigma0_sq, .. },
                IntervalRule::RobbinsExact { epsilon, weight } | IntervalRule::RobbinsApprox { epsilon, weight },
            ) => Tracker::NormalClosed {
                sigma0_sq,
                weight: normal_weight(&weight).ok_or_else(unsupported)?,
                ln_eps: PersistenceLevel::new(epsilon)?.ln_epsilon(),
            },
            (ModelTruth::Bernoulli { .. }, IntervalRule::LikelihoodRatio { conf }) => {
                Tracker::Level(LevelSet::new(Threshold::Ratio {
                    half_chi2: 0.5 * chi2_1_quantile(check_confidence(conf)?),
                }))
            }
            (ModelTruth::Bernoulli { .. }, IntervalRule::RobbinsExact { epsilon, weight }) => {
                let w = beta_weight(&weight).ok_or_else(unsupported)?;
                Tracker::Level(LevelSet::new(Threshold::Mixture {
                    ln_eps: PersistenceLevel::new(epsilon)?.ln_epsilon(),
                    alpha: w.alpha(),
                    beta: w.beta(),
                    ln_marginal: 0.0,
                }))
            }
            (ModelTruth::Bernoulli { .. }, IntervalRule::RobbinsApprox { epsilon, weight }) => Tracker::Arcsine {
                weight: normal_weight(&weight).ok_or_else(unsupported)?,
                ln_eps: PersistenceLevel::new(epsilon)?.ln_epsilon(),
            },
            (ModelTruth::TwoBernoulli { .. }, IntervalRule::ClassicalZ { conf }) => Tracker::Wald {
                z: two_sided_z(check_confidence(conf)?),
            },
            (ModelTruth::TwoBernoulli { .. }, IntervalRule::RobbinsApprox { epsilon, weight }) => {
                Tracker::LogOddsApprox {
                    weight: normal_weight(&weight).ok_or_else(unsupported)?,
                    ln_eps: PersistenceLevel::new(epsilon)?.ln_epsilon(),
                }
            }
            _ => return Err(unsupported()),
        };
        Ok(Slot {
            tracker,
            monitor: SequenceMonitor::new(truth),
        })
    }

    /// Nothing further can change once the sequence has contradicted itself
    /// (contradiction implies non-coverage).
    pub fn done(&self) -> bool {
        self.monitor.contradicted()
    }

    pub fn step(&mut self, run: &Running, monitored: bool) {
        if let Tracker::Level(ls) = &mut self.tracker {
            ls.advance(run);
            if monitored {
                ls.observe(run, &mut self.monitor);
            }
            return;
        }
        if !monitored {
            return;
        }
        let n = run.n as f64;
        let (center, half) = match self.tracker {
            Tracker::NormalZ { z_sigma } => (run.sum / n, z_sigma / n.sqrt()),
            Tracker::NormalClosed {
                sigma0_sq,
                weight,
                ln_eps,
            } => {
                let ybar = run.sum / n;
                (ybar, half_width_unchecked(sigma0_sq / n, ybar, &weight, ln_eps))
            }
            Tracker::Wald { z } => {
                let (psi, v) = continuity_corrected_estimates_raw(run.n, run.n, run.s1, run.s2);
                (psi, z * v.sqrt())
            }
            Tracker::LogOddsApprox { weight, ln_eps } => {
                let (psi, v) = continuity_corrected_estimates_raw(run.n, run.n, run.s1, run.s2);
                (psi, half_width_unchecked(v, psi, &weight, ln_eps))
            }
            Tracker::Arcsine { weight, ln_eps } => {
                let w = omega(run.s1 as f64 / n);
                let d = half_width_unchecked(0.25 / n, w, &weight, ln_eps);
                self.monitor.update_lower(omega_inverse(w - d));
                self.monitor.update_upper(omega_inverse(w + d));
                return;
            }
            Tracker::Level(_) => unreachable!(),
        };
        self.monitor.update_lower(center - half);
        self.monitor.update_upper(center + half);
    }
}

/// `s ln x + f ln(1 − x)` from cached logarithms, with `0 · ln 0 = 0`.
#[inline]
fn kernel_cached(s: f64, f: f64, (lx, l1mx): (f64, f64)) -> f64 {
    let a = if s > 0.0 { s * lx } else { 0.0 };
    let b = if f > 0.0 { f * l1mx } else { 0.0 };
    a + b
}

/// Point where `s ln x + f ln(1 − x)` falls to `c`, between `inside`
/// (value ≥ c) and `outside` (value < c).
fn concave_crossing(s: f64, f: f64, c: f64, inside: f64, outside: f64) -> f64 {
    let (mut a, mut b) = (outside, inside);
    let mut x = outside;
    for _ in 0..200 {
        let g = kernel_cached(s, f, (x.ln(), (-x).ln_1p())) - c;
        if g >= 0.0 {
            b = x;
        } else {
            a = x;
        }
        let slope = s / x - f / (1.0 - x);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut next = x - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (a + b);
            if next == a || next == b {
                return b;
            }
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    b
}

impl LevelSet {
    fn new(threshold: Threshold) -> Self {
        Self {
            threshold,
            lower_logs: (f64::NAN, f64::NAN),
            upper_logs: (f64::NAN, f64::NAN),
        }
    }

    fn advance(&mut self, run: &Running) {
        if let Threshold::Mixture {
            alpha,
            beta,
            ln_marginal,
            ..
        } = &mut self.threshold
        {
            let n_prev = (run.n - 1) as f64;
            let s_prev = (run.s1 - run.last as u64) as f64;
            let num = if run.last {
                s_prev + *alpha
            } else {
                n_prev - s_prev + *beta
            };
            *ln_marginal += (num / (n_prev + *alpha + *beta)).ln();
        }
    }

    fn observe(&mut self, run: &Running, monitor: &mut SequenceMonitor) {
        let (n, s) = (run.n as f64, run.s1 as f64);
        let f = n - s;
        let mle = s / n;
        let c = match self.threshold {
            Threshold::Ratio { half_chi2 } => kernel_ln_lik(n, s, mle) - half_chi2,
            Threshold::Mixture {
                ln_eps, ln_marginal, ..
            } => ln_eps + ln_marginal,
        };
        let logs = |x: f64| (x.ln(), (-x).ln_1p());

        let lo = monitor.max_lower();
        if lo < mle || lo == f64::NEG_INFINITY {
            let (start, value) = if lo == f64::NEG_INFINITY {
                (0.0, kernel_ln_lik(n, s, 0.0))
            } else {
                (lo, kernel_cached(s, f, self.lower_logs))
            };
            let new = if value < c {
                Some(concave_crossing(s, f, c, mle, start))
            } else if lo == f64::NEG_INFINITY {
                Some(0.0)
            } else {
                None
            };
            if let Some(x) = new {
                monitor.update_lower(x);
                self.lower_logs = logs(x);
            }
        }

        let hi = monitor.min_upper();
        if hi > mle || hi == f64::INFINITY {
            let (start, value) = if hi == f64::INFINITY {
                (1.0, kernel_ln_lik(n, s, 1.0))
            } else {
                (hi, kernel_cached(s, f, self.upper_logs))
            };
            let new = if value < c {
                Some(concave_crossing(s, f, c, mle, start))
            } else if hi == f64::INFINITY {
                Some(1.0)
            } else {
                None
            };
            if let Some(x) = new {
                monitor.update_upper(x);
                self.upper_logs = logs(x);
            }
        }
    }
}

fn rule_name(rule: &IntervalRule) -> &'static str {
    match rule {
        IntervalRule::ClassicalZ { .. } => "classical_z",
        IntervalRule::LikelihoodRatio { .. } => "likelihood_ratio",
        IntervalRule::RobbinsExact { .. } => "robbins_exact",
        IntervalRule::RobbinsApprox { .. } => "robbins_approx",
    }
}

fn rule_weight(rule: &IntervalRule) -> String {
    match rule {
        IntervalRule::RobbinsExact { weight, .. } | IntervalRule::RobbinsApprox { weight, .. } => weight.to_string(),
        _ => "none".into(),
    }
}

fn model_name(model: &ModelTruth) -> &'static str {
    match model {
        ModelTruth::NormalKnownVar { .. } => "normal",
        ModelTruth::Bernoulli { .. } => "bernoulli",
        ModelTruth::TwoBernoulli { .. } => "two-bernoulli",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernoulli::{arcsine_approx_interval, lr_interval, robbins_interval_bernoulli, BernoulliSuffStat};
    use crate::interval::Interval;
    use crate::normal::{classical_interval, robbins_interval_known_var, NormalSuffStat};
    use crate::simulation::stream::replication_rng;
    use crate::two_bernoulli::{approx_interval_log_odds, wald_interval, TwoSampleStat};
    use rand::Rng;

    fn lvl(e: f64) -> PersistenceLevel {
        PersistenceLevel::new(e).unwrap()
    }

    /// Runs a rule's tracker and, alongside, a monitor fed with the full
    /// library interval at every monitored step.
    fn compare<F>(model: ModelTruth, rule: IntervalRule, n_min: u64, n_max: u64, seed: u64, full: F, tol: f64)
    where
        F: Fn(&Running) -> Interval,
    {
        for r in 0..40 {
            let mut rng = replication_rng(seed, r);
            let mut run = Running::default();
            let mut slot = Slot::compile(&model, &rule, model.true_value()).unwrap();
            let mut reference = SequenceMonitor::new(model.true_value());
            for n in 1..=n_max {
                model.draw(&mut run, &mut rng);
                slot.step(&run, n >= n_min);
                if n >= n_min {
                    reference.update(&full(&run));
                }
                let m = slot.monitor;
                assert_eq!(m.contradicted(), reference.contradicted(), "rep {r} n {n}");
                assert_eq!(m.noncovered(), reference.noncovered(), "rep {r} n {n}");
                if n >= n_min {
                    assert!((m.max_lower() - reference.max_lower()).abs() <= tol, "rep {r} n {n}");
                    assert!((m.min_upper() - reference.min_upper()).abs() <= tol, "rep {r} n {n}");
                }
            }
        }
    }

    #[test]
    fn skipped_endpoints_do_not_change_exact_bernoulli_outcomes() {
        for theta in [0.5, 0.9] {
            let w = BetaWeight::new(0.5, 0.5).unwrap();
            compare(
                ModelTruth::Bernoulli { theta },
                IntervalRule::RobbinsExact {
                    epsilon: 0.5,
                    weight: w.into(),
                },
                20,
                600,
                5,
                |run| {
                    let st = BernoulliSuffStat::new(run.n, run.s1).unwrap();
                    robbins_interval_bernoulli(&st, &w, lvl(0.5)).unwrap()
                },
                1e-9,
            );
        }
    }

    #[test]
    fn skipped_endpoints_do_not_change_likelihood_ratio_outcomes() {
        compare(
            ModelTruth::Bernoulli { theta: 0.7 },
            IntervalRule::LikelihoodRatio { conf: 0.9 },
            5,
            600,
            8,
            |run| lr_interval(&BernoulliSuffStat::new(run.n, run.s1).unwrap(), 0.9).unwrap(),
            1e-9,
        );
    }

    #[test]
    fn boundary_counts_start_truncated() {
        // θ small enough that early steps see s = 0.
        compare(
            ModelTruth::Bernoulli { theta: 0.02 },
            IntervalRule::LikelihoodRatio { conf: 0.95 },
            1,
            200,
            2,
            |run| lr_interval(&BernoulliSuffStat::new(run.n, run.s1).unwrap(), 0.95).unwrap(),
            1e-9,
        );
    }

    #[test]
    fn closed_form_rules_match_library_intervals() {
        let w = NormalWeight::new(1.0, 1.0).unwrap();
        let normal = ModelTruth::NormalKnownVar {
            theta: 0.0,
            sigma0_sq: 2.0,
        };
        let stat = |run: &Running| NormalSuffStat::known_variance(run.n, run.sum / run.n as f64).unwrap();
        compare(
            normal,
            IntervalRule::RobbinsExact {
                epsilon: 0.5,
                weight: w.into(),
            },
            10,
            300,
            1,
            |run| robbins_interval_known_var(&stat(run), 2.0, &w, lvl(0.5)).unwrap(),
            1e-12,
        );
        compare(
            normal,
            IntervalRule::ClassicalZ { conf: 0.9 },
            10,
            300,
            1,
            |run| classical_interval(&stat(run), 2.0, 0.9).unwrap(),
            1e-12,
        );
        let two = ModelTruth::TwoBernoulli {
            theta1: 0.2,
            theta2: 0.25,
        };
        let ts = |run: &Running| TwoSampleStat::new(run.n, run.n, run.s1, run.s2).unwrap();
        compare(
            two,
            IntervalRule::RobbinsApprox {
                epsilon: 0.5,
                weight: w.into(),
            },
            10,
            300,
            4,
            |run| approx_interval_log_odds(&ts(run), &w, lvl(0.5)).unwrap(),
            1e-12,
        );
        compare(
            two,
            IntervalRule::ClassicalZ { conf: 0.95 },
            10,
            300,
            4,
            |run| wald_interval(&ts(run), 0.95).unwrap(),
            1e-12,
        );
        let wo = NormalWeight::new(0.8, 0.05).unwrap();
        compare(
            ModelTruth::Bernoulli { theta: 0.6 },
            IntervalRule::RobbinsApprox {
                epsilon: 0.5,
                weight: wo.into(),
            },
            10,
            300,
            4,
            |run| arcsine_approx_interval(&BernoulliSuffStat::new(run.n, run.s1).unwrap(), &wo, lvl(0.5)).unwrap(),
            1e-12,
        );
    }

    #[test]
    fn accumulated_marginal_matches_log_beta() {
        use crate::special::ln_beta;
        let mut ls = LevelSet::new(Threshold::Mixture {
            ln_eps: 0.0,
            alpha: 0.5,
            beta: 2.0,
            ln_marginal: 0.0,
        });
        let mut rng = replication_rng(1, 1);
        let mut run = Running::default();
        for _ in 0..4000 {
            run.n += 1;
            run.last = rng.random::<f64>() < 0.3;
            run.s1 += run.last as u64;
            ls.advance(&run);
        }
        let Threshold::Mixture { ln_marginal, .. } = ls.threshold else {
            unreachable!()
        };
        let (n, s) = (run.n as f64, run.s1 as f64);
        let exact = ln_beta(s + 0.5, n - s + 2.0) - ln_beta(0.5, 2.0);
        assert!(
            (ln_marginal - exact).abs() < 1e-9 * exact.abs(),
            "{ln_marginal} vs {exact}"
        );
    }
}
