//! Command-line and config-file arguments.
//!
//! Every subcommand's arguments are plain `Option`s so that a TOML config
//! file and the command line can be layered: keys in the file use the long
//! flag names, and flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "CONFSEQ_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_CONF: f64 = 0.95;
pub const DEFAULT_REPS: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "confseq",
    version,
    about = "Robbins confidence sequences and their Monte Carlo checks"
)]
pub struct Cli {
    /// TOML file with a `command` key and any of the subcommand's long flags
    /// as keys. Flags on the command line override the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Interval for one data set.
    Interval(IntervalArgs),
    /// Contradiction and non-coverage rates of one rule over simulated sequences.
    Simulate(SimulateArgs),
    /// Rerun one of the reference simulation tables.
    ReproduceTable(TableArgs),
    /// Monte Carlo check of P(sup_n q_n / p_n ≥ k) ≤ 1/k.
    VilleCheck(VilleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Interval(_) => "interval",
            Command::Simulate(_) => "simulate",
            Command::ReproduceTable(_) => "reproduce-table",
            Command::VilleCheck(_) => "ville-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Normal,
    Bernoulli,
    TwoBernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Robbins level set of the exact likelihood.
    Exact,
    /// Robbins closed form on an approximately normal estimator.
    Approx,
    /// z interval (normal) or Wald interval (two samples).
    Classical,
    /// Likelihood-ratio interval (Bernoulli).
    Lr,
}

impl Rule {
    pub fn is_robbins(self) -> bool {
        matches!(self, Rule::Exact | Rule::Approx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Plain,
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct IntervalArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Default: exact.
    #[arg(long, value_enum)]
    pub rule: Option<Rule>,
    /// Sample size (normal, bernoulli).
    #[arg(long)]
    pub n: Option<u64>,
    /// Number of successes (bernoulli).
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub n1: Option<u64>,
    #[arg(long)]
    pub n2: Option<u64>,
    #[arg(long)]
    pub s1: Option<u64>,
    #[arg(long)]
    pub s2: Option<u64>,
    /// Sample mean (normal).
    #[arg(long, allow_hyphen_values = true)]
    pub ybar: Option<f64>,
    /// Known variance σ0² (normal, normal weight or classical rule).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Variance estimate σ̂² = Σ(y − ȳ)²/n (normal, unknown variance).
    #[arg(long)]
    pub s2hat: Option<f64>,
    /// `family:p1,p2[,p3,p4]`: normal:mu,tau2 | beta:a,b | nig:mu,kappa,alpha,beta | logodds.
    #[arg(long)]
    pub weight: Option<String>,
    /// Robbins rules; default 0.2.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Classical and LR rules; default 0.95.
    #[arg(long)]
    pub conf: Option<f64>,
    /// Default: plain.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Default: exact for one sample, approx for two.
    #[arg(long, value_enum)]
    pub rule: Option<Rule>,
    /// True mean (normal, default 0) or proportion (bernoulli, default 0.5).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Default 0.2.
    #[arg(long)]
    pub theta1: Option<f64>,
    /// Default 0.25.
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Known variance (normal, default 1).
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub conf: Option<f64>,
    /// First monitored sample size.
    #[arg(long)]
    pub n_min: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Default 42, or the value of CONFSEQ_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; default all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Default: plain.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TableArgs {
    /// Table number 1-5.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Default: csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VilleArgs {
    /// normal or bernoulli.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Crossing level, must exceed 1.
    #[arg(long)]
    pub k: Option<f64>,
    /// Default 0 (normal) or 0.7 (bernoulli).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    /// Default 2000.
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Combines the parsed command line with the config file, if any.
pub fn resolve_command(cli: Cli) -> Result<Command, CliError> {
    let Some(path) = cli.config else {
        return cli
            .command
            .ok_or_else(|| CliError::usage("a subcommand is required (or --config with a `command` key)"));
    };
    let mut table = read_config(&path)?;
    let file_command = match table.remove("command") {
        Some(toml::Value::String(s)) => Some(s),
        Some(other) => {
            return Err(CliError::usage(format!(
                "{}: `command` must be a string, got {other}",
                path.display()
            )))
        }
        None => None,
    };
    let name = match (&cli.command, &file_command) {
        (Some(c), Some(f)) if c.name() != f => {
            return Err(CliError::usage(format!(
                "{}: config is for `{f}` but the command line runs `{}`",
                path.display(),
                c.name()
            )))
        }
        (Some(c), _) => c.name().to_string(),
        (None, Some(f)) => f.clone(),
        (None, None) => {
            return Err(CliError::usage(format!(
                "{}: no subcommand given and the file has no `command` key",
                path.display()
            )))
        }
    };
    let ctx = path.display().to_string();
    Ok(match (name.as_str(), cli.command) {
        ("interval", c) => Command::Interval(layer(
            table,
            flags_of(c, |c| match c {
                Command::Interval(a) => Some(a),
                _ => None,
            }),
            &ctx,
        )?),
        ("simulate", c) => Command::Simulate(layer(
            table,
            flags_of(c, |c| match c {
                Command::Simulate(a) => Some(a),
                _ => None,
            }),
            &ctx,
        )?),
        ("reproduce-table", c) => Command::ReproduceTable(layer(
            table,
            flags_of(c, |c| match c {
                Command::ReproduceTable(a) => Some(a),
                _ => None,
            }),
            &ctx,
        )?),
        ("ville-check", c) => Command::VilleCheck(layer(
            table,
            flags_of(c, |c| match c {
                Command::VilleCheck(a) => Some(a),
                _ => None,
            }),
            &ctx,
        )?),
        (other, _) => {
            return Err(CliError::usage(format!(
                "{ctx}: unknown command `{other}` (expected interval, simulate, reproduce-table or ville-check)"
            )))
        }
    })
}

fn flags_of<T: Default>(c: Option<Command>, pick: impl Fn(Command) -> Option<T>) -> T {
    c.and_then(pick).unwrap_or_default()
}

fn read_config(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::failure(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::usage(format!("--config {}: {e}", path.display())))
}

/// Flags that were given replace the file's values key by key.
fn layer<T: Serialize + DeserializeOwned>(mut file: toml::Table, flags: T, ctx: &str) -> Result<T, CliError> {
    let flags = toml::Table::try_from(&flags).map_err(|e| CliError::failure(format!("internal: {e}")))?;
    file.extend(flags);
    toml::Value::Table(file)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::usage(format!("--config {ctx}: {}", e.message())))
}

/// Seed from the flag or file, else the environment, else the default.
pub fn resolve_seed(given: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = given {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::usage(format!("{SEED_ENV}={v:?} is not a 64-bit seed: {e}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn resolve_threads(given: Option<usize>) -> Result<Option<usize>, CliError> {
    match given {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        t => Ok(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_keys() {
        let file: toml::Table = "model = \"bernoulli\"\nn = 100\ns = 40\nepsilon = 0.1".parse().unwrap();
        let flags = IntervalArgs {
            epsilon: Some(0.2),
            ..Default::default()
        };
        let a: IntervalArgs = layer(file, flags, "t").unwrap();
        assert_eq!(a.model, Some(Model::Bernoulli));
        assert_eq!(a.n, Some(100));
        assert_eq!(a.epsilon, Some(0.2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file: toml::Table = "modle = \"normal\"".parse().unwrap();
        let err = layer(file, IntervalArgs::default(), "t").unwrap_err();
        assert!(err.to_string().contains("modle"), "{err}");
    }

    #[test]
    fn kebab_case_keys_match_flags() {
        let file: toml::Table = "n-min = 5\nn-max = 50".parse().unwrap();
        let a: SimulateArgs = layer(file, SimulateArgs::default(), "t").unwrap();
        assert_eq!((a.n_min, a.n_max), (Some(5), Some(50)));
    }
}
