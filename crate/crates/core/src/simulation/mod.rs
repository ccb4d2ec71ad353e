//! Monte Carlo harness: growing samples drawn under a known truth, an
//! interval rule applied at every monitored `n`, and the fraction of
//! sequences that ever contradict themselves or ever exclude the truth.
//!
//! Every rule handed to [`run_rules`] in one call sees the same data
//! sequences (replication `r` always reads the stream described in
//! [`stream`]), so [`run_plan`] on a single rule reproduces the matching
//! cell of a multi-rule run exactly.

mod reference;
mod rules;
pub mod stream;
mod tables;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::two_bernoulli::log_odds_ratio;
use crate::weight::WeightSpec;

pub use reference::{reference_cells, ReferenceCell};
pub use tables::{reproduce_table, table_rows, CellComparison, ReportRow, TableId, TableReport, TableRow};

use rules::{Running, Slot};
use stream::{replication_rng, run_replications, Tally};

/// Data-generating model and its true parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelTruth {
    NormalKnownVar {
        theta: f64,
        sigma0_sq: f64,
    },
    Bernoulli {
        theta: f64,
    },
    /// One observation from each population per step, so `n1 = n2 = n`.
    TwoBernoulli {
        theta1: f64,
        theta2: f64,
    },
}

impl ModelTruth {
    /// The monitored parameter: `θ`, or the log odds ratio for two samples.
    pub fn true_value(&self) -> f64 {
        match *self {
            ModelTruth::NormalKnownVar { theta, .. } | ModelTruth::Bernoulli { theta } => theta,
            ModelTruth::TwoBernoulli { theta1, theta2 } => log_odds_ratio(theta1, theta2),
        }
    }

    fn validate(&self) -> Result<()> {
        let open_unit = |name: &'static str, t: f64| {
            if t > 0.0 && t < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: t,
                    reason: "success probability must lie strictly inside (0, 1)",
                })
            }
        };
        match *self {
            ModelTruth::NormalKnownVar { theta, sigma0_sq } => {
                crate::error::ensure_finite("theta", theta)?;
                crate::error::ensure_positive("sigma0_sq", sigma0_sq)?;
                Ok(())
            }
            ModelTruth::Bernoulli { theta } => open_unit("theta", theta),
            ModelTruth::TwoBernoulli { theta1, theta2 } => {
                open_unit("theta1", theta1)?;
                open_unit("theta2", theta2)
            }
        }
    }

    fn draw(&self, running: &mut Running, rng: &mut impl Rng) {
        running.n += 1;
        match *self {
            ModelTruth::NormalKnownVar { theta, sigma0_sq } => {
                let z: f64 = rng.sample(StandardNormal);
                running.sum += theta + sigma0_sq.sqrt() * z;
            }
            ModelTruth::Bernoulli { theta } => {
                running.last = rng.random::<f64>() < theta;
                running.s1 += running.last as u64;
            }
            ModelTruth::TwoBernoulli { theta1, theta2 } => {
                running.s1 += (rng.random::<f64>() < theta1) as u64;
                running.s2 += (rng.random::<f64>() < theta2) as u64;
            }
        }
    }
}

/// Interval rule applied at every monitored sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum IntervalRule {
    /// Normal model: `ȳ ± z σ0/√n`. Two samples: the Wald interval for `ψ`.
    ClassicalZ { conf: f64 },
    /// Bernoulli likelihood-ratio interval.
    LikelihoodRatio { conf: f64 },
    /// Normal closed form with a normal weight; Bernoulli level set with a
    /// beta weight.
    RobbinsExact { epsilon: f64, weight: WeightSpec },
    /// Normal closed form applied to an approximately normal estimator:
    /// `arcsin √ȳ` for one Bernoulli sample, the continuity-corrected log
    /// odds ratio for two. With known variance the normal model's
    /// approximate and exact rules coincide.
    RobbinsApprox { epsilon: f64, weight: WeightSpec },
}

impl IntervalRule {
    /// `100(1 − α)` or `100(1 − ε)`.
    pub fn level_pct(&self) -> f64 {
        match *self {
            IntervalRule::ClassicalZ { conf } | IntervalRule::LikelihoodRatio { conf } => 100.0 * conf,
            IntervalRule::RobbinsExact { epsilon, .. } | IntervalRule::RobbinsApprox { epsilon, .. } => {
                100.0 * (1.0 - epsilon)
            }
        }
    }
}

/// One simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub model: ModelTruth,
    pub rule: IntervalRule,
    pub n_min: u64,
    pub n_max: u64,
    pub reps: u64,
    pub seed: u64,
}

/// Counts of sequences with at least one contradiction / non-coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub contradictions: u64,
    pub noncoverages: u64,
    pub reps: u64,
}

impl CellOutcome {
    pub fn contradictions_pct(&self) -> f64 {
        100.0 * self.contradictions as f64 / self.reps as f64
    }

    pub fn noncoverages_pct(&self) -> f64 {
        100.0 * self.noncoverages as f64 / self.reps as f64
    }

    /// Binomial standard error of a percentage, `100 √(p(1−p)/reps)`.
    pub fn standard_error_pct(pct: f64, reps: u64) -> f64 {
        let p = pct / 100.0;
        100.0 * (p * (1.0 - p) / reps as f64).sqrt()
    }

    pub fn se_contradictions(&self) -> f64 {
        Self::standard_error_pct(self.contradictions_pct(), self.reps)
    }

    pub fn se_noncoverages(&self) -> f64 {
        Self::standard_error_pct(self.noncoverages_pct(), self.reps)
    }
}

struct Counts(Vec<[u64; 2]>);

impl Tally for Counts {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self
    }
}

fn check_range(n_min: u64, n_max: u64, reps: u64) -> Result<()> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidPlan(format!(
            "need 1 ≤ n_min ≤ n_max, got n_min={n_min}, n_max={n_max}"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidPlan("reps must be at least 1".into()));
    }
    Ok(())
}

/// Runs one cell.
pub fn run_plan(plan: &SequencePlan, threads: Option<usize>) -> Result<CellOutcome> {
    let out = run_rules(
        &plan.model,
        &[plan.rule],
        plan.n_min,
        plan.n_max,
        plan.reps,
        plan.seed,
        threads,
    )?;
    Ok(out[0])
}

/// Runs several rules on common data sequences: replication `r` draws its
/// sample from stream `(seed, r)` once and every rule is applied to it.
pub fn run_rules(
    model: &ModelTruth,
    rules: &[IntervalRule],
    n_min: u64,
    n_max: u64,
    reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<CellOutcome>> {
    model.validate()?;
    check_range(n_min, n_max, reps)?;
    let truth = model.true_value();
    let proto: Vec<Slot> = rules
        .iter()
        .map(|rule| Slot::compile(model, rule, truth))
        .collect::<Result<_>>()?;

    let counts = run_replications(reps, threads, |r| {
        let mut rng = replication_rng(seed, r);
        let mut slots = proto.clone();
        let mut running = Running::default();
        for n in 1..=n_max {
            model.draw(&mut running, &mut rng);
            let monitored = n >= n_min;
            let mut open = false;
            for slot in slots.iter_mut().filter(|s| !s.done()) {
                slot.step(&running, monitored);
                open |= !slot.done();
            }
            if !open {
                break;
            }
        }
        Ok(Counts(
            slots
                .iter()
                .map(|s| [s.monitor.contradicted() as u64, s.monitor.noncovered() as u64])
                .collect(),
        ))
    })?
    .expect("reps ≥ 1");

    Ok(counts
        .0
        .into_iter()
        .map(|[c, nc]| CellOutcome {
            contradictions: c,
            noncoverages: nc,
            reps,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{BetaWeight, NormalWeight};

    fn normal_plan(rule: IntervalRule, reps: u64) -> SequencePlan {
        SequencePlan {
            model: ModelTruth::NormalKnownVar {
                theta: 0.0,
                sigma0_sq: 1.0,
            },
            rule,
            n_min: 10,
            n_max: 400,
            reps,
            seed: 3,
        }
    }

    #[test]
    fn single_replication_gives_zero_or_hundred() {
        let out = run_plan(&normal_plan(IntervalRule::ClassicalZ { conf: 0.9 }, 1), Some(1)).unwrap();
        for p in [out.contradictions_pct(), out.noncoverages_pct()] {
            assert!(p == 0.0 || p == 100.0);
        }
    }

    #[test]
    fn single_rule_equals_cell_of_shared_run() {
        let model = ModelTruth::Bernoulli { theta: 0.7 };
        let rules = [
            IntervalRule::LikelihoodRatio { conf: 0.95 },
            IntervalRule::RobbinsExact {
                epsilon: 0.5,
                weight: BetaWeight::new(1.0, 1.0).unwrap().into(),
            },
        ];
        let all = run_rules(&model, &rules, 20, 300, 200, 9, Some(1)).unwrap();
        for (i, rule) in rules.iter().enumerate() {
            let plan = SequencePlan {
                model,
                rule: *rule,
                n_min: 20,
                n_max: 300,
                reps: 200,
                seed: 9,
            };
            assert_eq!(run_plan(&plan, Some(1)).unwrap(), all[i]);
        }
    }

    #[test]
    fn invalid_plans_rejected() {
        let rule = IntervalRule::ClassicalZ { conf: 0.9 };
        let mut p = normal_plan(rule, 10);
        p.n_min = 500;
        assert!(matches!(run_plan(&p, Some(1)), Err(Error::InvalidPlan(_))));
        let mut p = normal_plan(rule, 0);
        p.reps = 0;
        assert!(run_plan(&p, Some(1)).is_err());
        let p = normal_plan(IntervalRule::LikelihoodRatio { conf: 0.9 }, 10);
        assert!(matches!(run_plan(&p, Some(1)), Err(Error::InvalidPlan(_))));
        let p = normal_plan(
            IntervalRule::RobbinsExact {
                epsilon: 0.2,
                weight: BetaWeight::new(1.0, 1.0).unwrap().into(),
            },
            10,
        );
        assert!(run_plan(&p, Some(1)).is_err());
        let p = SequencePlan {
            model: ModelTruth::Bernoulli { theta: 1.0 },
            ..normal_plan(rule, 10)
        };
        assert!(run_plan(&p, Some(1)).is_err());
    }

    #[test]
    fn contradiction_never_exceeds_noncoverage() {
        let w: WeightSpec = NormalWeight::new(0.0, 1.0).unwrap().into();
        let rules = [
            IntervalRule::ClassicalZ { conf: 0.9 },
            IntervalRule::RobbinsExact {
                epsilon: 0.5,
                weight: w,
            },
        ];
        let model = ModelTruth::NormalKnownVar {
            theta: 0.0,
            sigma0_sq: 1.0,
        };
        for out in run_rules(&model, &rules, 10, 500, 300, 1, Some(1)).unwrap() {
            assert!(out.contradictions <= out.noncoverages);
        }
    }

    #[test]
    fn serde_round_trip_of_plan() {
        let plan = normal_plan(
            IntervalRule::RobbinsApprox {
                epsilon: 0.2,
                weight: NormalWeight::new(0.0, 1.0).unwrap().into(),
            },
            10,
        );
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<SequencePlan>(&json).unwrap(), plan);
    }
}
