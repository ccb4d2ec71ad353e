//! Configuration grids of the five simulation tables and their reports.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight::{BetaWeight, NormalWeight, WeightSpec};

use super::{reference_cells, run_rules, CellOutcome, IntervalRule, ModelTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TableId {
    pub const ALL: [TableId; 5] = [TableId::T1, TableId::T2, TableId::T3, TableId::T4, TableId::T5];

    pub fn number(&self) -> u8 {
        match self {
            TableId::T1 => 1,
            TableId::T2 => 2,
            TableId::T3 => 3,
            TableId::T4 => 4,
            TableId::T5 => 5,
        }
    }

    /// Monitored sample sizes `(n_min, n_max)`.
    pub fn n_range(&self) -> (u64, u64) {
        match self {
            TableId::T1 | TableId::T2 => (10, 4000),
            TableId::T3 | TableId::T4 => (100, 4000),
            TableId::T5 => (50, 2000),
        }
    }
}

impl std::fmt::Display for TableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T{}", self.number())
    }
}

impl std::str::FromStr for TableId {
    type Err = String;

    /// Accepts `1`–`5` or `T1`–`T5`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let digits = s.trim().trim_start_matches(['T', 't']);
        match digits {
            "1" => Ok(TableId::T1),
            "2" => Ok(TableId::T2),
            "3" => Ok(TableId::T3),
            "4" => Ok(TableId::T4),
            "5" => Ok(TableId::T5),
            _ => Err(format!("unknown table `{s}`; expected 1-5")),
        }
    }
}

/// One (row, level) cell of a table's grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub model: ModelTruth,
    pub rule: IntervalRule,
}

const CONF: [f64; 4] = [0.90, 0.95, 0.99, 0.995];
const EPS: [f64; 4] = [0.50, 0.20, 0.10, 0.05];

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn normal(m: f64, v: f64) -> WeightSpec {
    NormalWeight::new(m, v).expect("valid preset").into()
}

fn beta(a: f64, b: f64) -> WeightSpec {
    BetaWeight::new(a, b).expect("valid preset").into()
}

/// The grid of a table, rows in print order, levels ascending.
pub fn table_rows(table: TableId) -> Vec<TableRow> {
    let normal_truth = ModelTruth::NormalKnownVar {
        theta: 0.0,
        sigma0_sq: 1.0,
    };
    let mut rows = Vec::new();
    let mut robbins_block = |label: String, model: ModelTruth, weight: WeightSpec, exact: bool| {
        for epsilon in EPS {
            let rule = if exact {
                IntervalRule::RobbinsExact { epsilon, weight }
            } else {
                IntervalRule::RobbinsApprox { epsilon, weight }
            };
            rows.push(TableRow {
                label: label.clone(),
                model,
                rule,
            });
        }
    };
    match table {
        TableId::T1 => {
            for conf in CONF {
                rows.push(TableRow {
                    label: "classical".into(),
                    model: normal_truth,
                    rule: IntervalRule::ClassicalZ { conf },
                });
            }
        }
        TableId::T2 => {
            for (m, v) in [(0.0, 0.1), (0.0, 1.0), (0.0, 10.0), (1.0, 1.0), (2.0, 1.0), (5.0, 1.0)] {
                let label = format!("mu0={} tau2={}", fmt_num(m), fmt_num(v));
                robbins_block(label, normal_truth, normal(m, v), true);
            }
        }
        TableId::T3 => {
            for theta in [0.5, 0.7, 0.9] {
                for conf in CONF {
                    rows.push(TableRow {
                        label: format!("theta={theta}"),
                        model: ModelTruth::Bernoulli { theta },
                        rule: IntervalRule::LikelihoodRatio { conf },
                    });
                }
            }
        }
        TableId::T4 => {
            for theta in [0.5, 0.7, 0.9] {
                for (a, b) in [(0.5, 0.5), (1.0, 1.0), (5.0, 5.0)] {
                    let label = format!("theta={theta} Beta({a},{b})");
                    robbins_block(label, ModelTruth::Bernoulli { theta }, beta(a, b), true);
                }
            }
        }
        TableId::T5 => {
            let model = ModelTruth::TwoBernoulli {
                theta1: 0.2,
                theta2: 0.25,
            };
            let two_pi2 = 2.0 * PI * PI;
            for (m, v, tau) in [
                (0.0, two_pi2, "2pi^2"),
                (0.0, 5.0, "5"),
                (0.0, 1.0, "1"),
                (0.0, 0.1, "0.1"),
                (1.0, 5.0, "5"),
                (-1.0, 5.0, "5"),
            ] {
                let label = format!("mu0={} tau2={tau}", fmt_num(m));
                robbins_block(label, model, normal(m, v), false);
            }
        }
    }
    rows
}

/// One output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub table: String,
    pub row_label: String,
    /// `100(1 − α)` or `100(1 − ε)`.
    pub level: f64,
    pub contradictions_pct: f64,
    pub noncoverages_pct: f64,
    pub se_contra: f64,
    pub se_noncov: f64,
    pub reps: u64,
    pub nmin: u64,
    pub nmax: u64,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_outcome(
        table: &str,
        row_label: &str,
        level: f64,
        out: &CellOutcome,
        (nmin, nmax): (u64, u64),
        seed: u64,
    ) -> Self {
        ReportRow {
            table: table.to_string(),
            row_label: row_label.to_string(),
            level,
            contradictions_pct: out.contradictions_pct(),
            noncoverages_pct: out.noncoverages_pct(),
            se_contra: out.se_contradictions(),
            se_noncov: out.se_noncoverages(),
            reps: out.reps,
            nmin,
            nmax,
            seed,
        }
    }
}

/// Fixed-decimal CSV form of a row.
#[derive(Serialize)]
struct CsvRow<'a> {
    table: &'a str,
    row_label: &'a str,
    level: String,
    contradictions_pct: String,
    noncoverages_pct: String,
    se_contra: String,
    se_noncov: String,
    reps: u64,
    nmin: u64,
    nmax: u64,
    seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub rows: Vec<ReportRow>,
}

/// Observed cell next to its reference counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub row_label: String,
    pub level: f64,
    pub observed_contradictions: f64,
    pub reference_contradictions: f64,
    pub observed_noncoverages: f64,
    pub reference_noncoverages: f64,
    pub reps: u64,
}

impl CellComparison {
    pub fn max_abs_deviation(&self) -> f64 {
        (self.observed_contradictions - self.reference_contradictions)
            .abs()
            .max((self.observed_noncoverages - self.reference_noncoverages).abs())
    }
}

impl TableReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                table: &r.table,
                row_label: &r.row_label,
                level: format!("{:.1}", r.level),
                contradictions_pct: format!("{:.2}", r.contradictions_pct),
                noncoverages_pct: format!("{:.2}", r.noncoverages_pct),
                se_contra: format!("{:.3}", r.se_contra),
                se_noncov: format!("{:.3}", r.se_noncov),
                reps: r.reps,
                nmin: r.nmin,
                nmax: r.nmax,
                seed: r.seed,
            })
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable")
    }

    /// Pairs rows of a full-grid table report with the reference cells.
    /// Rows that do not belong to `table` are ignored.
    pub fn compare_with_reference(&self, table: TableId) -> Vec<CellComparison> {
        let tag = table.to_string();
        let reference = reference_cells(table);
        self.rows
            .iter()
            .filter(|r| r.table == tag)
            .filter_map(|r| {
                reference
                    .iter()
                    .find(|p| p.row_label == r.row_label && (p.level - r.level).abs() < 1e-9)
                    .map(|p| CellComparison {
                        row_label: r.row_label.clone(),
                        level: r.level,
                        observed_contradictions: r.contradictions_pct,
                        reference_contradictions: p.contradictions_pct,
                        observed_noncoverages: r.noncoverages_pct,
                        reference_noncoverages: p.noncoverages_pct,
                        reps: r.reps,
                    })
            })
            .collect()
    }
}

/// Runs every cell of a table. Rows sharing a model are run on common data
/// sequences.
pub fn reproduce_table(table: TableId, reps: u64, seed: u64, threads: Option<usize>) -> Result<TableReport> {
    let rows = table_rows(table);
    let range = table.n_range();
    let mut outcomes: Vec<Option<CellOutcome>> = vec![None; rows.len()];
    let mut models: Vec<ModelTruth> = Vec::new();
    for r in &rows {
        if !models.contains(&r.model) {
            models.push(r.model);
        }
    }
    for model in models {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].model == model).collect();
        let rules: Vec<IntervalRule> = idx.iter().map(|&i| rows[i].rule).collect();
        let out = run_rules(&model, &rules, range.0, range.1, reps, seed, threads)?;
        for (k, &i) in idx.iter().enumerate() {
            outcomes[i] = Some(out[k]);
        }
    }
    let tag = table.to_string();
    Ok(TableReport {
        rows: rows
            .iter()
            .zip(outcomes)
            .map(|(row, out)| {
                ReportRow::from_outcome(
                    &tag,
                    &row.label,
                    row.rule.level_pct(),
                    &out.expect("every row belongs to a model group"),
                    range,
                    seed,
                )
            })
            .collect(),
    })
}
