//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function returns a flat `Float64Array`; the layouts are
//! documented on the native functions, which carry the logic and are tested
//! without a browser.

use confseq::bernoulli::BernoulliSuffStat;
use confseq::bernoulli::{arcsine_approx_interval, lr_interval, omega_matched_weight, robbins_interval_bernoulli};
use confseq::engine::{NormalVille, VilleModel};
use confseq::normal::{classical_interval, robbins_interval_known_var, NormalSuffStat};
use confseq::simulation::stream::replication_rng;
use confseq::two_bernoulli::{approx_interval_log_odds, robbins_conditional_interval, wald_interval, TwoSampleStat};
use confseq::{BetaWeight, Interval, NormalWeight, PersistenceLevel};
use wasm_bindgen::prelude::*;

type Out = Result<Vec<f64>, String>;

fn err(e: confseq::Error) -> String {
    e.to_string()
}

fn push(v: &mut Vec<f64>, i: &Interval) {
    v.push(i.lower());
    v.push(i.upper());
}

/// `[exact lo, hi, arcsine lo, hi, lr lo, hi]` for `s` successes in `n`,
/// Beta(a, b) weight, persistence level `ε` and LR confidence `conf`.
pub fn bernoulli_intervals(n: u32, s: u32, a: f64, b: f64, epsilon: f64, conf: f64) -> Out {
    let st = BernoulliSuffStat::new(n.into(), s.into()).map_err(err)?;
    let w = BetaWeight::new(a, b).map_err(err)?;
    let lvl = PersistenceLevel::new(epsilon).map_err(err)?;
    let mut out = Vec::with_capacity(6);
    push(&mut out, &robbins_interval_bernoulli(&st, &w, lvl).map_err(err)?);
    let on_omega = omega_matched_weight(&w).map_err(err)?;
    push(&mut out, &arcsine_approx_interval(&st, &on_omega, lvl).map_err(err)?);
    push(&mut out, &lr_interval(&st, conf).map_err(err)?);
    Ok(out)
}

/// One simulated normal path with `θ = theta`, `σ0² = 1`. For each
/// `n = 1..=n_max`, five numbers: `n, Robbins lo, hi, classical lo, hi`.
pub fn normal_path(seed: u64, n_max: u32, theta: f64, mu0: f64, tau2: f64, epsilon: f64, conf: f64) -> Out {
    if n_max == 0 || n_max > 100_000 {
        return Err("n_max must lie in 1..=100000".into());
    }
    let w = NormalWeight::new(mu0, tau2).map_err(err)?;
    let lvl = PersistenceLevel::new(epsilon).map_err(err)?;
    let model = NormalVille {
        theta,
        sigma_sq: 1.0,
        weight: w,
    };
    let mut rng = replication_rng(seed, 0);
    let mut state = model.start();
    let mut out = Vec::with_capacity(5 * n_max as usize);
    for _ in 0..n_max {
        model.advance(&mut state, &mut rng);
        let (n, sum) = state;
        let st = NormalSuffStat::known_variance(n, sum / n as f64).map_err(err)?;
        out.push(n as f64);
        push(&mut out, &robbins_interval_known_var(&st, 1.0, &w, lvl).map_err(err)?);
        push(&mut out, &classical_interval(&st, 1.0, conf).map_err(err)?);
    }
    Ok(out)
}

/// `[conditional lo, hi, approximate lo, hi, wald lo, hi]` for the log odds
/// ratio; the approximate rule uses an `N(0, tau2)` weight. The conditional
/// pair is NaN when the conditional likelihood is flat or monotone.
pub fn two_sample_intervals(n1: u32, n2: u32, s1: u32, s2: u32, tau2: f64, epsilon: f64, conf: f64) -> Out {
    let st = TwoSampleStat::new(n1.into(), n2.into(), s1.into(), s2.into()).map_err(err)?;
    let lvl = PersistenceLevel::new(epsilon).map_err(err)?;
    let mut out = Vec::with_capacity(6);
    match robbins_conditional_interval(&st, lvl) {
        Ok(i) => push(&mut out, &i),
        Err(confseq::Error::UnboundedRegion) => out.extend([f64::NAN, f64::NAN]),
        Err(e) => return Err(err(e)),
    }
    let w = NormalWeight::new(0.0, tau2).map_err(err)?;
    push(&mut out, &approx_interval_log_odds(&st, &w, lvl).map_err(err)?);
    push(&mut out, &wald_interval(&st, conf).map_err(err)?);
    Ok(out)
}

fn js(r: Out) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = bernoulliIntervals)]
pub fn bernoulli_intervals_js(n: u32, s: u32, a: f64, b: f64, epsilon: f64, conf: f64) -> Result<Vec<f64>, JsError> {
    js(bernoulli_intervals(n, s, a, b, epsilon, conf))
}

#[wasm_bindgen(js_name = normalPath)]
#[allow(clippy::too_many_arguments)]
pub fn normal_path_js(
    seed: u32,
    n_max: u32,
    theta: f64,
    mu0: f64,
    tau2: f64,
    epsilon: f64,
    conf: f64,
) -> Result<Vec<f64>, JsError> {
    js(normal_path(seed.into(), n_max, theta, mu0, tau2, epsilon, conf))
}

#[wasm_bindgen(js_name = twoSampleIntervals)]
pub fn two_sample_intervals_js(
    n1: u32,
    n2: u32,
    s1: u32,
    s2: u32,
    tau2: f64,
    epsilon: f64,
    conf: f64,
) -> Result<Vec<f64>, JsError> {
    js(two_sample_intervals(n1, n2, s1, s2, tau2, epsilon, conf))
}
