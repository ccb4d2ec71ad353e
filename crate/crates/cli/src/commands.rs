use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use confseq::bernoulli::{
    arcsine_approx_interval, beta_binomial_log_pmf, binomial_log_likelihood, omega, omega_matched_weight,
    BernoulliSuffStat,
};
use confseq::engine::{level_set, BernoulliVille, NormalVille};
use confseq::normal::{
    approx_interval_unknown_var, classical_interval, known_var_log_mixture, nig_log_mixture, nig_profile_interval,
    robbins_interval_known_var, NormalSuffStat,
};
use confseq::simulation::{
    reproduce_table, run_plan, CellOutcome, IntervalRule, ModelTruth, ReportRow, SequencePlan, TableId, TableReport,
};
use confseq::special::{chi2_1_quantile, normal_ln_pdf, two_sided_z};
use confseq::two_bernoulli::{
    approx_interval_log_odds, continuity_corrected_estimates, robbins_conditional_region, wald_interval, TwoSampleStat,
};
use confseq::{
    verify_ville_inequality, BetaWeight, Interval, LogLikelihood, NormalWeight, PersistenceLevel, WeightSpec,
};
use serde::Serialize;

use crate::config::{
    resolve_seed, resolve_threads, Format, IntervalArgs, Model, Rule, SimulateArgs, TableArgs, VilleArgs, DEFAULT_CONF,
    DEFAULT_EPSILON, DEFAULT_REPS,
};
use crate::CliError;

const TWO_PI_SQ: f64 = 2.0 * PI * PI;

fn need<T>(value: Option<T>, flag: &str, why: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required {why}")))
}

fn forbid(given: &[(&str, bool)], why: &str) -> Result<(), CliError> {
    match given.iter().find(|(_, g)| *g) {
        Some((flag, _)) => Err(CliError::usage(format!("--{flag} does not apply {why}"))),
        None => Ok(()),
    }
}

fn parse_weight(text: &str) -> Result<WeightSpec, CliError> {
    text.parse()
        .map_err(|e| CliError::usage(format!("--weight {text:?}: {e}")))
}

fn level(epsilon: Option<f64>) -> Result<PersistenceLevel, CliError> {
    PersistenceLevel::new(epsilon.unwrap_or(DEFAULT_EPSILON)).map_err(|e| CliError::usage(format!("--epsilon: {e}")))
}

fn confidence(conf: Option<f64>) -> Result<f64, CliError> {
    let c = conf.unwrap_or(DEFAULT_CONF);
    if c > 0.0 && c < 1.0 {
        Ok(c)
    } else {
        Err(CliError::usage(format!(
            "--conf must lie strictly between 0 and 1, got {c}"
        )))
    }
}

/// `--epsilon` belongs to Robbins rules and `--conf` to the others.
fn check_level_flags(rule: Rule, epsilon: Option<f64>, conf: Option<f64>) -> Result<(), CliError> {
    if rule.is_robbins() && conf.is_some() {
        return Err(CliError::usage(
            "--conf applies to the classical and lr rules; Robbins rules take --epsilon",
        ));
    }
    if !rule.is_robbins() && epsilon.is_some() {
        return Err(CliError::usage(
            "--epsilon applies to the exact and approx rules; use --conf",
        ));
    }
    Ok(())
}

fn normal_of(spec: WeightSpec, what: &str) -> Result<NormalWeight, CliError> {
    match spec {
        WeightSpec::Normal(w) => Ok(w),
        other => Err(CliError::usage(format!(
            "--weight {other}: {what} needs a normal weight"
        ))),
    }
}

/// Normal weight on `ω = arcsin √θ`; a beta weight is replaced by the normal
/// with matching mean and variance of `ω`.
fn omega_weight(spec: WeightSpec) -> Result<NormalWeight, CliError> {
    match spec {
        WeightSpec::Normal(w) => Ok(w),
        WeightSpec::Beta(b) => omega_matched_weight(&b).map_err(CliError::numeric),
        other => Err(CliError::usage(format!(
            "--weight {other}: the arcsine rule needs a normal weight on arcsin √θ or a beta weight"
        ))),
    }
}

fn rule_name(rule: Rule) -> &'static str {
    match rule {
        Rule::Exact => "exact",
        Rule::Approx => "approx",
        Rule::Classical => "classical",
        Rule::Lr => "lr",
    }
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::Normal => "normal",
        Model::Bernoulli => "bernoulli",
        Model::TwoBernoulli => "two-bernoulli",
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::failure(format!("stdout: {e}")))
        }
    }
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::failure(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::failure(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::failure(format!("csv: {e}")))
}

fn json_of<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::failure(format!("json: {e}")))
}

#[derive(Debug, Serialize)]
pub struct IntervalOutput {
    pub model: &'static str,
    pub rule: &'static str,
    pub weight: Option<String>,
    pub epsilon: Option<f64>,
    pub conf: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// `ln ε + ln q_n` for Robbins rules, the log-likelihood cut otherwise.
    pub threshold: f64,
    pub lower_truncated: bool,
    pub upper_truncated: bool,
}

struct Computed {
    interval: Interval,
    threshold: f64,
    truncated: (bool, bool),
}

impl Computed {
    fn plain(interval: Interval, threshold: f64) -> Self {
        Computed {
            interval,
            threshold,
            truncated: (false, false),
        }
    }
}

pub fn interval(a: IntervalArgs) -> Result<(), CliError> {
    let model = need(a.model, "model", "(normal, bernoulli or two-bernoulli)")?;
    let rule = a.rule.unwrap_or(Rule::Exact);
    check_level_flags(rule, a.epsilon, a.conf)?;
    let default_weight = match (model, rule) {
        (_, Rule::Classical | Rule::Lr) => None,
        (Model::Normal, _) => Some("normal:0,1".to_string()),
        (Model::Bernoulli, _) => Some("beta:1,1".to_string()),
        (Model::TwoBernoulli, Rule::Exact) => Some("logodds".to_string()),
        (Model::TwoBernoulli, Rule::Approx) => Some(format!("normal:0,{TWO_PI_SQ}")),
    };
    if !rule.is_robbins() && a.weight.is_some() {
        return Err(CliError::usage(format!(
            "--weight does not apply to --rule {}",
            rule_name(rule)
        )));
    }
    let weight_text = a.weight.clone().or(default_weight);
    let weight = weight_text.as_deref().map(parse_weight).transpose()?;

    let computed = match model {
        Model::Normal => interval_normal(&a, rule, weight)?,
        Model::Bernoulli => interval_bernoulli(&a, rule, weight)?,
        Model::TwoBernoulli => interval_two(&a, rule, weight)?,
    };

    let robbins = rule.is_robbins();
    let report = IntervalOutput {
        model: model_name(model),
        rule: rule_name(rule),
        weight: weight.map(|w| w.to_string()),
        epsilon: robbins.then(|| a.epsilon.unwrap_or(DEFAULT_EPSILON)),
        conf: (!robbins).then(|| a.conf.unwrap_or(DEFAULT_CONF)),
        lower: computed.interval.lower(),
        upper: computed.interval.upper(),
        threshold: computed.threshold,
        lower_truncated: computed.truncated.0,
        upper_truncated: computed.truncated.1,
    };
    let text = match a.format.unwrap_or(Format::Plain) {
        Format::Plain => plain_interval(&report),
        Format::Csv => csv_of(std::slice::from_ref(&report))?,
        Format::Json => json_of(&report)?,
    };
    emit(&a.out, &text)
}

fn plain_interval(r: &IntervalOutput) -> String {
    let level = match (r.epsilon, r.conf) {
        (Some(e), _) => format!("epsilon={e}"),
        (_, Some(c)) => format!("conf={c}"),
        _ => String::new(),
    };
    let weight = r.weight.as_deref().map(|w| format!(" weight={w}")).unwrap_or_default();
    format!(
        "{:.4} {:.4}\nthreshold {:.4}\n# model={} rule={}{weight} {level}\n",
        r.lower, r.upper, r.threshold, r.model, r.rule
    )
}

fn interval_normal(a: &IntervalArgs, rule: Rule, weight: Option<WeightSpec>) -> Result<Computed, CliError> {
    forbid(
        &[
            ("s", a.s.is_some()),
            ("n1", a.n1.is_some()),
            ("n2", a.n2.is_some()),
            ("s1", a.s1.is_some()),
            ("s2", a.s2.is_some()),
        ],
        "to the normal model",
    )?;
    let n = need(a.n, "n", "for the normal model")?;
    let ybar = need(a.ybar, "ybar", "for the normal model")?;
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let known = |what: &str| -> Result<(NormalSuffStat, f64), CliError> {
        forbid(&[("s2hat", a.s2hat.is_some())], what)?;
        let s2 = need(a.sigma2, "sigma2", what)?;
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(CliError::usage(format!("--sigma2 must be positive, got {s2}")));
        }
        let st = NormalSuffStat::known_variance(n, ybar).map_err(|e| CliError::usage(format!("--ybar: {e}")))?;
        Ok((st, s2))
    };
    let estimated = |what: &str| -> Result<NormalSuffStat, CliError> {
        forbid(&[("sigma2", a.sigma2.is_some())], what)?;
        let s2hat = need(a.s2hat, "s2hat", what)?;
        NormalSuffStat::new(n, ybar, s2hat).map_err(|e| CliError::usage(format!("--s2hat: {e}")))
    };
    let lvl = || level(a.epsilon);
    match (rule, weight) {
        (Rule::Exact, Some(WeightSpec::Normal(w))) => {
            let (st, s2) = known("with a normal weight (known variance)")?;
            let l = lvl()?;
            let i = robbins_interval_known_var(&st, s2, &w, l).map_err(CliError::numeric)?;
            Ok(Computed::plain(
                i,
                l.ln_epsilon() + known_var_log_mixture(&st, s2, &w).value,
            ))
        }
        (Rule::Exact, Some(WeightSpec::NormalInverseGamma(w))) => {
            let st = estimated("with a nig weight (unknown variance)")?;
            let l = lvl()?;
            let i = nig_profile_interval(&st, &w, l).map_err(CliError::numeric)?;
            Ok(Computed::plain(i, l.ln_epsilon() + nig_log_mixture(&st, &w).value))
        }
        (Rule::Exact, Some(other)) => Err(CliError::usage(format!(
            "--weight {other}: the normal model takes a normal or nig weight"
        ))),
        (Rule::Approx, Some(spec)) => {
            let w = normal_of(spec, "the approximate normal rule")?;
            let st = estimated("for --rule approx (unknown variance); with a known variance use --rule exact")?;
            let l = lvl()?;
            let i = approx_interval_unknown_var(&st, &w, l).map_err(CliError::numeric)?;
            let v = st.sigma_hat_sq() / n as f64;
            Ok(Computed::plain(
                i,
                l.ln_epsilon() + normal_ln_pdf(ybar, w.mean(), w.variance() + v),
            ))
        }
        (Rule::Classical, _) => {
            let (st, s2) = known("for the classical rule")?;
            let c = confidence(a.conf)?;
            let i = classical_interval(&st, s2, c).map_err(CliError::numeric)?;
            let v = s2 / n as f64;
            let z = two_sided_z(c);
            Ok(Computed::plain(i, normal_ln_pdf(ybar, ybar, v) - 0.5 * z * z))
        }
        (Rule::Lr, _) => Err(CliError::usage("--rule lr applies to the bernoulli model only")),
        (_, None) => unreachable!("Robbins rules always carry a weight"),
    }
}

fn interval_bernoulli(a: &IntervalArgs, rule: Rule, weight: Option<WeightSpec>) -> Result<Computed, CliError> {
    forbid(
        &[
            ("ybar", a.ybar.is_some()),
            ("sigma2", a.sigma2.is_some()),
            ("s2hat", a.s2hat.is_some()),
            ("n1", a.n1.is_some()),
            ("n2", a.n2.is_some()),
            ("s1", a.s1.is_some()),
            ("s2", a.s2.is_some()),
        ],
        "to the bernoulli model",
    )?;
    let n = need(a.n, "n", "for the bernoulli model")?;
    let s = need(a.s, "s", "for the bernoulli model")?;
    let st = BernoulliSuffStat::new(n, s).map_err(|e| CliError::usage(format!("--n/--s: {e}")))?;
    match (rule, weight) {
        (Rule::Exact, Some(spec)) => {
            let WeightSpec::Beta(w) = spec else {
                return Err(CliError::usage(format!(
                    "--weight {spec}: the exact bernoulli rule needs a beta weight"
                )));
            };
            let l = level(a.epsilon)?;
            let ll = binomial_log_likelihood(&st);
            let threshold = l.ln_epsilon() + beta_binomial_log_pmf(&st, &w);
            let r = level_set(&ll, threshold).map_err(CliError::numeric)?;
            Ok(Computed {
                interval: r.interval,
                threshold: r.threshold,
                truncated: (r.lower_truncated, r.upper_truncated),
            })
        }
        (Rule::Approx, Some(spec)) => {
            let w = omega_weight(spec)?;
            let l = level(a.epsilon)?;
            let i = arcsine_approx_interval(&st, &w, l).map_err(CliError::numeric)?;
            let v = 0.25 / n as f64;
            Ok(Computed::plain(
                i,
                l.ln_epsilon() + normal_ln_pdf(omega(st.mle()), w.mean(), w.variance() + v),
            ))
        }
        (Rule::Lr, _) => {
            let c = confidence(a.conf)?;
            let ll = binomial_log_likelihood(&st);
            let r = level_set(&ll, ll.max_ln_lik() - 0.5 * chi2_1_quantile(c)).map_err(CliError::numeric)?;
            Ok(Computed {
                interval: r.interval,
                threshold: r.threshold,
                truncated: (r.lower_truncated, r.upper_truncated),
            })
        }
        (Rule::Classical, _) => Err(CliError::usage(
            "--rule classical applies to the normal and two-bernoulli models; use --rule lr",
        )),
        (_, None) => unreachable!("Robbins rules always carry a weight"),
    }
}

fn interval_two(a: &IntervalArgs, rule: Rule, weight: Option<WeightSpec>) -> Result<Computed, CliError> {
    forbid(
        &[
            ("n", a.n.is_some()),
            ("s", a.s.is_some()),
            ("ybar", a.ybar.is_some()),
            ("sigma2", a.sigma2.is_some()),
            ("s2hat", a.s2hat.is_some()),
        ],
        "to the two-bernoulli model",
    )?;
    let why = "for the two-bernoulli model";
    let st = TwoSampleStat::new(
        need(a.n1, "n1", why)?,
        need(a.n2, "n2", why)?,
        need(a.s1, "s1", why)?,
        need(a.s2, "s2", why)?,
    )
    .map_err(|e| CliError::usage(format!("--n1/--n2/--s1/--s2: {e}")))?;
    match (rule, weight) {
        (Rule::Exact, Some(spec)) => {
            if !matches!(spec, WeightSpec::LogOdds(_)) {
                return Err(CliError::usage(format!(
                    "--weight {spec}: the exact conditional rule uses the logodds weight"
                )));
            }
            let r = robbins_conditional_region(&st, level(a.epsilon)?).map_err(CliError::numeric)?;
            Ok(Computed {
                interval: r.interval,
                threshold: r.threshold,
                truncated: (r.lower_truncated, r.upper_truncated),
            })
        }
        (Rule::Approx, Some(spec)) => {
            let w = normal_of(spec, "the approximate log odds rule")?;
            let l = level(a.epsilon)?;
            let i = approx_interval_log_odds(&st, &w, l).map_err(CliError::numeric)?;
            let (psi, v) = continuity_corrected_estimates(&st);
            Ok(Computed::plain(
                i,
                l.ln_epsilon() + normal_ln_pdf(psi, w.mean(), w.variance() + v),
            ))
        }
        (Rule::Classical, _) => {
            let c = confidence(a.conf)?;
            let i = wald_interval(&st, c).map_err(CliError::numeric)?;
            let (psi, v) = continuity_corrected_estimates(&st);
            let z = two_sided_z(c);
            Ok(Computed::plain(i, normal_ln_pdf(psi, psi, v) - 0.5 * z * z))
        }
        (Rule::Lr, _) => Err(CliError::usage("--rule lr applies to the bernoulli model only")),
        (_, None) => unreachable!("Robbins rules always carry a weight"),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let model = need(a.model, "model", "(normal, bernoulli or two-bernoulli)")?;
    let rule = a.rule.unwrap_or(match model {
        Model::TwoBernoulli => Rule::Approx,
        _ => Rule::Exact,
    });
    check_level_flags(rule, a.epsilon, a.conf)?;
    if !rule.is_robbins() && a.weight.is_some() {
        return Err(CliError::usage(format!(
            "--weight does not apply to --rule {}",
            rule_name(rule)
        )));
    }
    if model == Model::TwoBernoulli && rule == Rule::Exact {
        return Err(CliError::usage(
            "--rule exact is not simulated for two-bernoulli (one quadrature per step); use --rule approx",
        ));
    }

    let (truth, label, (nmin_default, nmax_default)) = match model {
        Model::Normal => {
            forbid(
                &[("theta1", a.theta1.is_some()), ("theta2", a.theta2.is_some())],
                "to the normal model",
            )?;
            let theta = a.theta.unwrap_or(0.0);
            let s2 = a.sigma2.unwrap_or(1.0);
            (
                ModelTruth::NormalKnownVar { theta, sigma0_sq: s2 },
                format!("theta={theta} sigma2={s2}"),
                (10, 4000),
            )
        }
        Model::Bernoulli => {
            forbid(
                &[
                    ("theta1", a.theta1.is_some()),
                    ("theta2", a.theta2.is_some()),
                    ("sigma2", a.sigma2.is_some()),
                ],
                "to the bernoulli model",
            )?;
            let theta = a.theta.unwrap_or(0.5);
            (ModelTruth::Bernoulli { theta }, format!("theta={theta}"), (100, 4000))
        }
        Model::TwoBernoulli => {
            forbid(
                &[("theta", a.theta.is_some()), ("sigma2", a.sigma2.is_some())],
                "to the two-bernoulli model (use --theta1/--theta2)",
            )?;
            let (t1, t2) = (a.theta1.unwrap_or(0.2), a.theta2.unwrap_or(0.25));
            (
                ModelTruth::TwoBernoulli { theta1: t1, theta2: t2 },
                format!("theta1={t1} theta2={t2}"),
                (50, 2000),
            )
        }
    };

    let weight_text = rule.is_robbins().then(|| {
        a.weight.clone().unwrap_or_else(|| match model {
            Model::Normal => "normal:0,1".to_string(),
            Model::Bernoulli => "beta:1,1".to_string(),
            Model::TwoBernoulli => format!("normal:0,{TWO_PI_SQ}"),
        })
    });
    let weight = weight_text.as_deref().map(parse_weight).transpose()?;
    let interval_rule = match (rule, weight) {
        (Rule::Classical, _) => IntervalRule::ClassicalZ {
            conf: confidence(a.conf)?,
        },
        (Rule::Lr, _) => IntervalRule::LikelihoodRatio {
            conf: confidence(a.conf)?,
        },
        (Rule::Exact, Some(w)) => IntervalRule::RobbinsExact {
            epsilon: level(a.epsilon)?.epsilon(),
            weight: w,
        },
        (Rule::Approx, Some(w)) => {
            let w = if model == Model::Bernoulli {
                WeightSpec::Normal(omega_weight(w)?)
            } else {
                w
            };
            IntervalRule::RobbinsApprox {
                epsilon: level(a.epsilon)?.epsilon(),
                weight: w,
            }
        }
        (_, None) => unreachable!("Robbins rules always carry a weight"),
    };

    let plan = SequencePlan {
        model: truth,
        rule: interval_rule,
        n_min: a.n_min.unwrap_or(nmin_default),
        n_max: a.n_max.unwrap_or(nmax_default),
        reps: a.reps.unwrap_or(DEFAULT_REPS),
        seed: resolve_seed(a.seed)?,
    };
    let threads = resolve_threads(a.threads)?;
    let outcome = run_plan(&plan, threads).map_err(CliError::from_core)?;

    let row_label = match &weight {
        Some(w) => format!("{label} {} {w}", rule_name(rule)),
        None => format!("{label} {}", rule_name(rule)),
    };
    let row = ReportRow::from_outcome(
        "sim",
        &row_label,
        interval_rule.level_pct(),
        &outcome,
        (plan.n_min, plan.n_max),
        plan.seed,
    );
    let text = match a.format.unwrap_or(Format::Plain) {
        Format::Plain => plain_simulation(&row, &outcome),
        Format::Csv => TableReport { rows: vec![row] }.to_csv_string(),
        Format::Json => json_of(&row)?,
    };
    emit(&a.out, &text)
}

fn plain_simulation(r: &ReportRow, o: &CellOutcome) -> String {
    format!(
        "contradictions {:.2}% (se {:.3}) noncoverages {:.2}% (se {:.3})\n\
         # {} level={:.1} n={}..{} reps={} seed={} counts={}/{}\n",
        r.contradictions_pct,
        r.se_contra,
        r.noncoverages_pct,
        r.se_noncov,
        r.row_label,
        r.level,
        r.nmin,
        r.nmax,
        r.reps,
        r.seed,
        o.contradictions,
        o.noncoverages
    )
}

pub fn reproduce(a: TableArgs) -> Result<(), CliError> {
    let id_text = need(a.id, "id", "(1-5)")?;
    let table: TableId = id_text
        .parse()
        .map_err(|e| CliError::usage(format!("--id {id_text:?}: {e}")))?;
    let reps = a.reps.unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let seed = resolve_seed(a.seed)?;
    let threads = resolve_threads(a.threads)?;
    let report = reproduce_table(table, reps, seed, threads).map_err(CliError::from_core)?;

    let text = match a.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv_string(),
        Format::Json => report.to_json_string() + "\n",
        Format::Plain => plain_table(&report),
    };
    emit(&a.out, &text)?;

    let cmp = report.compare_with_reference(table);
    let worst = cmp
        .iter()
        .max_by(|x, y| x.max_abs_deviation().total_cmp(&y.max_abs_deviation()));
    if let Some(w) = worst {
        eprintln!(
            "{table}: {} cells, max |observed - reference| = {:.2} points ({} at {:.1}) reps={reps} seed={seed}",
            cmp.len(),
            w.max_abs_deviation(),
            w.row_label,
            w.level
        );
    }
    Ok(())
}

fn plain_table(report: &TableReport) -> String {
    let width = report.rows.iter().map(|r| r.row_label.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in &report.rows {
        s.push_str(&format!(
            "{:<width$}  {:>5.1}  {:>6.2}  {:>6.2}\n",
            r.row_label, r.level, r.contradictions_pct, r.noncoverages_pct
        ));
    }
    s
}

#[derive(Debug, Serialize)]
pub struct VilleOutput {
    pub model: &'static str,
    pub theta: f64,
    pub weight: String,
    pub k: f64,
    pub n_max: u64,
    pub reps: u64,
    pub seed: u64,
    pub crossings: u64,
    pub estimate: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn ville(a: VilleArgs) -> Result<(), CliError> {
    let model = need(a.model, "model", "(normal or bernoulli)")?;
    let k = need(a.k, "k", "")?;
    if !(k > 1.0 && k.is_finite()) {
        return Err(CliError::usage(format!(
            "--k must exceed 1 for a meaningful bound, got {k}"
        )));
    }
    let n_max = a.n_max.unwrap_or(2000);
    let reps = a.reps.unwrap_or(DEFAULT_REPS);
    if n_max == 0 || reps == 0 {
        return Err(CliError::usage("--n-max and --reps must be at least 1"));
    }
    let seed = resolve_seed(a.seed)?;
    let threads = resolve_threads(a.threads)?;
    let (theta, weight, estimate) = match model {
        Model::Normal => {
            let theta = a.theta.unwrap_or(0.0);
            let sigma_sq = a.sigma2.unwrap_or(1.0);
            if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
                return Err(CliError::usage(format!("--sigma2 must be positive, got {sigma_sq}")));
            }
            let spec = parse_weight(a.weight.as_deref().unwrap_or("normal:0,1"))?;
            let w = normal_of(spec, "the normal model")?;
            let m = NormalVille {
                theta,
                sigma_sq,
                weight: w,
            };
            let est = verify_ville_inequality(&m, k, n_max, reps, seed, threads).map_err(CliError::from_core)?;
            (theta, spec, est)
        }
        Model::Bernoulli => {
            forbid(&[("sigma2", a.sigma2.is_some())], "to the bernoulli model")?;
            let theta = a.theta.unwrap_or(0.7);
            if !(theta > 0.0 && theta < 1.0) {
                return Err(CliError::usage(format!(
                    "--theta must lie strictly inside (0, 1), got {theta}"
                )));
            }
            let spec = parse_weight(a.weight.as_deref().unwrap_or("beta:1,1"))?;
            let WeightSpec::Beta(w) = spec else {
                return Err(CliError::usage(format!(
                    "--weight {spec}: the bernoulli model needs a beta weight"
                )));
            };
            let m = BernoulliVille {
                theta,
                weight: BetaWeight::new(w.alpha(), w.beta()).map_err(CliError::numeric)?,
            };
            let est = verify_ville_inequality(&m, k, n_max, reps, seed, threads).map_err(CliError::from_core)?;
            (theta, spec, est)
        }
        Model::TwoBernoulli => {
            return Err(CliError::usage(
                "--model two-bernoulli is not available for ville-check",
            ));
        }
    };
    let out = VilleOutput {
        model: model_name(model),
        theta,
        weight: weight.to_string(),
        k,
        n_max,
        reps,
        seed,
        crossings: estimate.crossings,
        estimate: estimate.estimate,
        standard_error: estimate.standard_error,
        bound: estimate.bound,
        pass: estimate.pass,
    };
    let text = match a.format.unwrap_or(Format::Plain) {
        Format::Plain => format!(
            "estimate {:.4} bound {:.4} se {:.4} {}\n# model={} theta={} weight={} k={} n-max={} reps={} seed={} crossings={}\n",
            estimate.estimate,
            estimate.bound,
            estimate.standard_error,
            if estimate.pass { "PASS" } else { "FAIL" },
            out.model,
            theta,
            out.weight,
            k,
            n_max,
            reps,
            seed,
            estimate.crossings
        ),
        Format::Csv => csv_of(std::slice::from_ref(&out))?,
        Format::Json => json_of(&out)?,
    };
    emit(&a.out, &text)
}
