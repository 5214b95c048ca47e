//! Comparison of manual (semi-automatic) and fully automated quantification
//! results, metric by metric and network by network.
//!
//! Records carry three quantities per patient stack — scar volume in ml,
//! scar percentage, and microvascular-obstruction percentage. Three options
//! relate each automated method to the manual reference:
//!
//! - **Option 1**: the share of stacks whose value satisfies a threshold
//!   predicate (either `auto < tau`, the literal reading, or
//!   `|auto - manual| < tau` behind a mode switch).
//! - **Option 2**: the ratio of sums, `100 * sum(auto) / sum(manual)`.
//! - **Option 3**: `100 * (1 - sum(|auto - manual|) / sum(manual))`, clamped
//!   to [0, 100] — 100 means exact agreement.
//!
//! [`tally`] then scores the three resulting tables: each (table, metric)
//! slot credits every network attaining the slot's maximum percentage, and
//! each network's win count out of 9 summarizes which resolution/kernel
//! combination tracks the manual results best.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Report column order for the three quantified metrics.
pub const METRIC_NAMES: [&str; 3] = ["scar_ml", "scar_pct", "mo_pct"];

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("record (stack {stack_id}, method {method}): {problem}")]
    InvalidRecord {
        stack_id: String,
        method: String,
        problem: String,
    },
    #[error("duplicate stack id {stack_id} for method {method}")]
    DuplicateStack { stack_id: String, method: String },
    #[error("stack ids differ from the manual set; missing {missing:?}, unexpected {extra:?}")]
    StackMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("no records to compare")]
    Empty,
    #[error("no records with method \"manual\"")]
    MissingManual,
    #[error("no automated methods beside \"manual\"")]
    NoNetworks,
    #[error("thresholds must all be positive, got {0}, {1}, {2}")]
    InvalidThresholds(f64, f64, f64),
    #[error("malformed option report: {0}")]
    MalformedReport(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// One stack's quantification under one method (the manual reference or an
/// automated network).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantRecord {
    pub stack_id: String,
    pub method: String,
    pub scar_ml: f64,
    pub scar_pct: f64,
    pub mo_pct: f64,
}

impl QuantRecord {
    pub fn validate(&self) -> Result<(), QuantError> {
        let problem = if !(self.scar_ml.is_finite() && self.scar_ml >= 0.0) {
            Some(format!("scar_ml must be >= 0, got {}", self.scar_ml))
        } else if !(self.scar_pct.is_finite() && (0.0..=100.0).contains(&self.scar_pct)) {
            Some(format!(
                "scar_pct must be in [0, 100], got {}",
                self.scar_pct
            ))
        } else if !(self.mo_pct.is_finite() && (0.0..=100.0).contains(&self.mo_pct)) {
            Some(format!("mo_pct must be in [0, 100], got {}", self.mo_pct))
        } else {
            None
        };
        match problem {
            Some(problem) => Err(QuantError::InvalidRecord {
                stack_id: self.stack_id.clone(),
                method: self.method.clone(),
                problem,
            }),
            None => Ok(()),
        }
    }

    fn metric(&self, idx: usize) -> f64 {
        match idx {
            0 => self.scar_ml,
            1 => self.scar_pct,
            2 => self.mo_pct,
            _ => unreachable!("metric index out of range"),
        }
    }
}

/// Which predicate option 1 counts per stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateMode {
    /// `auto < tau` — the literal reading of the comparison.
    ValueBelow,
    /// `|auto - manual| < tau` — closeness to the manual value.
    AbsDiffBelow,
}

impl std::fmt::Display for PredicateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredicateMode::ValueBelow => "value-below",
            PredicateMode::AbsDiffBelow => "abs-diff-below",
        })
    }
}

/// Option-1 thresholds per metric plus the predicate they feed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionThresholds {
    pub scar_ml_tau: f64,
    pub scar_pct_tau: f64,
    pub mo_pct_tau: f64,
    pub predicate_mode: PredicateMode,
}

impl Default for OptionThresholds {
    fn default() -> Self {
        Self {
            scar_ml_tau: 25.0,
            scar_pct_tau: 15.0,
            mo_pct_tau: 0.35,
            predicate_mode: PredicateMode::ValueBelow,
        }
    }
}

impl OptionThresholds {
    pub fn validate(&self) -> Result<(), QuantError> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if ok(self.scar_ml_tau) && ok(self.scar_pct_tau) && ok(self.mo_pct_tau) {
            Ok(())
        } else {
            Err(QuantError::InvalidThresholds(
                self.scar_ml_tau,
                self.scar_pct_tau,
                self.mo_pct_tau,
            ))
        }
    }

    fn tau(&self, idx: usize) -> f64 {
        [self.scar_ml_tau, self.scar_pct_tau, self.mo_pct_tau][idx]
    }
}

/// One comparison table: `values[metric][network]` holds a percentage, or
/// `None` where the option's denominator vanished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionReport {
    pub option: u8,
    /// Set for option 1 only; records which predicate produced the numbers.
    pub predicate_mode: Option<PredicateMode>,
    pub metrics: Vec<String>,
    pub networks: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl OptionReport {
    /// Builds a report from raw percentages, metric-major. Intended for
    /// entering externally computed tables and for tests.
    pub fn from_values(
        option: u8,
        networks: &[&str],
        values: &[Vec<f64>],
    ) -> Result<Self, QuantError> {
        if values.len() != METRIC_NAMES.len() {
            return Err(QuantError::MalformedReport(format!(
                "expected {} metric rows, got {}",
                METRIC_NAMES.len(),
                values.len()
            )));
        }
        if values.iter().any(|row| row.len() != networks.len()) {
            return Err(QuantError::MalformedReport(
                "every metric row needs one value per network".to_string(),
            ));
        }
        Ok(Self {
            option,
            predicate_mode: None,
            metrics: METRIC_NAMES.iter().map(|m| m.to_string()).collect(),
            networks: networks.iter().map(|n| n.to_string()).collect(),
            values: values
                .iter()
                .map(|row| row.iter().map(|&v| Some(v)).collect())
                .collect(),
        })
    }

    pub fn value(&self, metric: &str, network: &str) -> Option<f64> {
        let m = self.metrics.iter().position(|x| x == metric)?;
        let n = self.networks.iter().position(|x| x == network)?;
        self.values[m][n]
    }
}

/// Pairs manual and automated records by stack id, requiring the two sets
/// to cover exactly the same stacks with no duplicates.
fn paired<'a>(
    manual: &'a [QuantRecord],
    auto: &'a [QuantRecord],
) -> Result<Vec<(&'a QuantRecord, &'a QuantRecord)>, QuantError> {
    if manual.is_empty() {
        return Err(QuantError::Empty);
    }
    let mut by_id: BTreeMap<&str, &QuantRecord> = BTreeMap::new();
    for r in auto {
        if by_id.insert(r.stack_id.as_str(), r).is_some() {
            return Err(QuantError::DuplicateStack {
                stack_id: r.stack_id.clone(),
                method: r.method.clone(),
            });
        }
    }
    let mut seen: Vec<&str> = Vec::with_capacity(manual.len());
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(manual.len());
    for m in manual {
        if seen.contains(&m.stack_id.as_str()) {
            return Err(QuantError::DuplicateStack {
                stack_id: m.stack_id.clone(),
                method: m.method.clone(),
            });
        }
        seen.push(&m.stack_id);
        match by_id.remove(m.stack_id.as_str()) {
            Some(a) => pairs.push((m, a)),
            None => missing.push(m.stack_id.clone()),
        }
    }
    let extra: Vec<String> = by_id.keys().map(|k| k.to_string()).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(QuantError::StackMismatch { missing, extra });
    }
    Ok(pairs)
}

/// Option 1 for one network: per metric, the percentage of stacks whose
/// value satisfies the threshold predicate. Always a multiple of `100/N`.
pub fn option1(
    manual: &[QuantRecord],
    auto: &[QuantRecord],
    thresholds: &OptionThresholds,
) -> Result<[f64; 3], QuantError> {
    thresholds.validate()?;
    let pairs = paired(manual, auto)?;
    let n = pairs.len() as f64;
    let mut out = [0.0; 3];
    for (idx, slot) in out.iter_mut().enumerate() {
        let tau = thresholds.tau(idx);
        let hits = pairs
            .iter()
            .filter(|(m, a)| match thresholds.predicate_mode {
                PredicateMode::ValueBelow => a.metric(idx) < tau,
                PredicateMode::AbsDiffBelow => (a.metric(idx) - m.metric(idx)).abs() < tau,
            })
            .count();
        *slot = 100.0 * hits as f64 / n;
    }
    Ok(out)
}

/// Option 2 for one network: per metric, `100 * sum(auto) / sum(manual)`;
/// undefined when the manual sum is zero.
pub fn option2(
    manual: &[QuantRecord],
    auto: &[QuantRecord],
) -> Result<[Option<f64>; 3], QuantError> {
    let pairs = paired(manual, auto)?;
    let mut out = [None; 3];
    for (idx, slot) in out.iter_mut().enumerate() {
        let manual_sum: f64 = pairs.iter().map(|(m, _)| m.metric(idx)).sum();
        let auto_sum: f64 = pairs.iter().map(|(_, a)| a.metric(idx)).sum();
        if manual_sum > 0.0 {
            *slot = Some(100.0 * auto_sum / manual_sum);
        }
    }
    Ok(out)
}

/// Option 3 for one network: per metric,
/// `100 * (1 - sum(|auto - manual|) / sum(manual))` clamped to [0, 100];
/// undefined when the manual sum is zero. Exactly 100 only on perfect
/// agreement.
pub fn option3(
    manual: &[QuantRecord],
    auto: &[QuantRecord],
) -> Result<[Option<f64>; 3], QuantError> {
    let pairs = paired(manual, auto)?;
    let mut out = [None; 3];
    for (idx, slot) in out.iter_mut().enumerate() {
        let manual_sum: f64 = pairs.iter().map(|(m, _)| m.metric(idx)).sum();
        let diff_sum: f64 = pairs
            .iter()
            .map(|(m, a)| (a.metric(idx) - m.metric(idx)).abs())
            .sum();
        if manual_sum > 0.0 {
            *slot = Some((100.0 * (1.0 - diff_sum / manual_sum)).clamp(0.0, 100.0));
        }
    }
    Ok(out)
}

/// One automated method's records, keyed by its name.
pub type MethodRecords = (String, Vec<QuantRecord>);

/// Splits raw records into the manual reference and the automated methods,
/// both in first-appearance order, validating every record.
pub fn group_records(
    records: &[QuantRecord],
) -> Result<(Vec<QuantRecord>, Vec<MethodRecords>), QuantError> {
    if records.is_empty() {
        return Err(QuantError::Empty);
    }
    for r in records {
        r.validate()?;
    }
    let mut manual = Vec::new();
    let mut networks: Vec<MethodRecords> = Vec::new();
    for r in records {
        if r.method == "manual" {
            manual.push(r.clone());
        } else if let Some((_, list)) = networks.iter_mut().find(|(n, _)| *n == r.method) {
            list.push(r.clone());
        } else {
            networks.push((r.method.clone(), vec![r.clone()]));
        }
    }
    if manual.is_empty() {
        return Err(QuantError::MissingManual);
    }
    if networks.is_empty() {
        return Err(QuantError::NoNetworks);
    }
    Ok((manual, networks))
}

/// Runs all three options over every automated method, producing the three
/// comparison tables.
pub fn build_reports(
    records: &[QuantRecord],
    thresholds: &OptionThresholds,
) -> Result<[OptionReport; 3], QuantError> {
    let (manual, networks) = group_records(records)?;
    let names: Vec<String> = networks.iter().map(|(n, _)| n.clone()).collect();
    let mut tables: [Vec<Vec<Option<f64>>>; 3] = std::array::from_fn(|_| vec![Vec::new(); 3]);
    for (_, auto) in &networks {
        let o1 = option1(&manual, auto, thresholds)?;
        let o2 = option2(&manual, auto)?;
        let o3 = option3(&manual, auto)?;
        for idx in 0..3 {
            tables[0][idx].push(Some(o1[idx]));
            tables[1][idx].push(o2[idx]);
            tables[2][idx].push(o3[idx]);
        }
    }
    let metrics: Vec<String> = METRIC_NAMES.iter().map(|m| m.to_string()).collect();
    Ok(std::array::from_fn(|t| OptionReport {
        option: t as u8 + 1,
        predicate_mode: (t == 0).then_some(thresholds.predicate_mode),
        metrics: metrics.clone(),
        networks: names.clone(),
        values: tables[t].clone(),
    }))
}

/// Winners of one (table, metric) slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub option: u8,
    pub metric: String,
    pub best: f64,
    pub winners: Vec<String>,
}

/// Win counts over the 3 tables x 3 metrics slots; ties credit every tied
/// network, so the counts can sum past 9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyReport {
    pub networks: Vec<String>,
    pub wins: Vec<u32>,
    pub fractions: Vec<f64>,
    pub slots: Vec<SlotOutcome>,
}

impl TallyReport {
    pub fn wins_of(&self, network: &str) -> Option<u32> {
        let i = self.networks.iter().position(|n| n == network)?;
        Some(self.wins[i])
    }
}

/// Credits, in each of the nine (table, metric) slots, every network whose
/// percentage attains the slot maximum, and reports win counts and
/// fractions of 9 per network.
pub fn tally(tables: &[&OptionReport; 3]) -> Result<TallyReport, QuantError> {
    let networks = tables[0].networks.clone();
    if networks.len() < 2 {
        return Err(QuantError::MalformedReport(
            "tally needs at least two networks".to_string(),
        ));
    }
    for t in tables {
        if t.networks != networks {
            return Err(QuantError::MalformedReport(
                "tables list different networks".to_string(),
            ));
        }
        if t.metrics.len() != 3 || t.values.len() != 3 {
            return Err(QuantError::MalformedReport(format!(
                "option {} table does not have 3 metric rows",
                t.option
            )));
        }
        if t.values.iter().any(|row| row.len() != networks.len()) {
            return Err(QuantError::MalformedReport(format!(
                "option {} table rows do not match the network list",
                t.option
            )));
        }
    }

    let mut wins = vec![0u32; networks.len()];
    let mut slots = Vec::with_capacity(9);
    for t in tables {
        for (metric, row) in t.metrics.iter().zip(&t.values) {
            let best = row
                .iter()
                .flatten()
                .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
            if best == f64::NEG_INFINITY {
                return Err(QuantError::MalformedReport(format!(
                    "option {} metric {metric} has no defined values",
                    t.option
                )));
            }
            let mut winners = Vec::new();
            for (i, v) in row.iter().enumerate() {
                if *v == Some(best) {
                    wins[i] += 1;
                    winners.push(networks[i].clone());
                }
            }
            slots.push(SlotOutcome {
                option: t.option,
                metric: metric.clone(),
                best,
                winners,
            });
        }
    }
    let fractions = wins.iter().map(|&w| f64::from(w) / 9.0).collect();
    Ok(TallyReport {
        networks,
        wins,
        fractions,
        slots,
    })
}

/// Reads quantification records from CSV with the header
/// `stack_id,method,scar_ml,scar_pct,mo_pct`, validating every row.
pub fn read_records_csv<R: io::Read>(reader: R) -> Result<Vec<QuantRecord>, QuantError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let records: Vec<QuantRecord> = rdr.deserialize().collect::<Result<_, _>>()?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}
