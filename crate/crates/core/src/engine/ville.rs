//! Monte Carlo check of `P_θ(q_n/p_n(θ) ≥ k for some n) ≤ 1/k`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::simulation::stream::{replication_rng, run_replications, Tally};
use crate::special::{ln_beta, normal_ln_pdf, xlogy};
use crate::weight::{BetaWeight, NormalWeight};

/// A correctly specified model together with a mixture density, stepped one
/// observation at a time.
pub trait VilleModel: Sync {
    type State;

    fn start(&self) -> Self::State;

    fn advance(&self, state: &mut Self::State, rng: &mut ChaCha8Rng);

    /// `ln q_n(y) − ℓ(θ_true; y)` for the data seen so far.
    fn log_ratio(&self, state: &Self::State) -> f64;
}

/// Normal mean, known variance, `N(μ0, τ0²)` weight.
#[derive(Debug, Clone, Copy)]
pub struct NormalVille {
    pub theta: f64,
    pub sigma_sq: f64,
    pub weight: NormalWeight,
}

impl VilleModel for NormalVille {
    /// `(n, Σ y)`.
    type State = (u64, f64);

    fn start(&self) -> Self::State {
        (0, 0.0)
    }

    fn advance(&self, state: &mut Self::State, rng: &mut ChaCha8Rng) {
        let z: f64 = rng.sample(StandardNormal);
        state.0 += 1;
        state.1 += self.theta + self.sigma_sq.sqrt() * z;
    }

    fn log_ratio(&self, &(n, sum): &Self::State) -> f64 {
        let v = self.sigma_sq / n as f64;
        let ybar = sum / n as f64;
        normal_ln_pdf(ybar, self.weight.mean(), self.weight.variance() + v) - normal_ln_pdf(ybar, self.theta, v)
    }
}

/// Bernoulli proportion with a `Beta(α, β)` weight (beta-binomial mixture).
#[derive(Debug, Clone, Copy)]
pub struct BernoulliVille {
    pub theta: f64,
    pub weight: BetaWeight,
}

impl VilleModel for BernoulliVille {
    /// `(n, s)`.
    type State = (u64, u64);

    fn start(&self) -> Self::State {
        (0, 0)
    }

    fn advance(&self, state: &mut Self::State, rng: &mut ChaCha8Rng) {
        state.0 += 1;
        if rng.random::<f64>() < self.theta {
            state.1 += 1;
        }
    }

    fn log_ratio(&self, &(n, s): &Self::State) -> f64 {
        let (a, b) = (self.weight.alpha(), self.weight.beta());
        let (n, s) = (n as f64, s as f64);
        ln_beta(s + a, n - s + b) - ln_beta(a, b) - xlogy(s, self.theta) - xlogy(n - s, 1.0 - self.theta)
    }
}

/// Outcome of [`verify_ville_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VilleEstimate {
    pub k: f64,
    pub n_max: u64,
    pub reps: u64,
    pub crossings: u64,
    /// Fraction of replications whose likelihood ratio reached `k`.
    pub estimate: f64,
    /// Binomial standard error at the bound, `sqrt((1/k)(1 − 1/k)/reps)`.
    pub standard_error: f64,
    pub bound: f64,
    /// `estimate ≤ 1/k + 3·SE`.
    pub pass: bool,
}

struct Crossings(u64);

impl Tally for Crossings {
    fn merge(self, other: Self) -> Self {
        Crossings(self.0 + other.0)
    }
}

/// Estimates the probability that `ln q_n − ℓ(θ_true)` reaches `ln k` for
/// some `n ≤ n_max`.
pub fn verify_ville_inequality<M: VilleModel>(
    model: &M,
    k: f64,
    n_max: u64,
    reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<VilleEstimate> {
    ensure_positive("k", k)?;
    if reps == 0 || n_max == 0 {
        return Err(Error::InvalidPlan("reps and n_max must be positive".into()));
    }
    let ln_k = k.ln();
    let crossings = run_replications(reps, threads, |r| {
        let mut rng = replication_rng(seed, r);
        let mut state = model.start();
        for _ in 0..n_max {
            model.advance(&mut state, &mut rng);
            if model.log_ratio(&state) >= ln_k {
                return Ok(Crossings(1));
            }
        }
        Ok(Crossings(0))
    })?
    .map_or(0, |c| c.0);
    let bound = (1.0 / k).min(1.0);
    let standard_error = (bound * (1.0 - bound) / reps as f64).sqrt();
    let estimate = crossings as f64 / reps as f64;
    Ok(VilleEstimate {
        k,
        n_max,
        reps,
        crossings,
        estimate,
        standard_error,
        bound,
        pass: estimate <= bound + 3.0 * standard_error,
    })
}
