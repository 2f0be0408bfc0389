use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::BellIndex;

pub const CSV_HEADER: &str = "trial_id,bell23,bell14,povm_outcome,success,fidelity";

/// Fidelity written for inconclusive trials.
pub const INCONCLUSIVE_FIDELITY: f64 = -1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub bell23: BellIndex,
    pub bell14: BellIndex,
    pub povm_outcome: u8,
    pub success: bool,
    pub fidelity: f64,
}

impl TrialRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.trial_id,
            self.bell23,
            self.bell14,
            self.povm_outcome,
            self.success,
            format_significant(self.fidelity, 12)
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed record `{line}`"));
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        let [id, b23, b14, outcome, success, fidelity] = fields.as_slice() else {
            return Err(bad());
        };
        Ok(Self {
            trial_id: id.parse().map_err(|_| bad())?,
            bell23: b23.parse()?,
            bell14: b14.parse()?,
            povm_outcome: outcome.parse().map_err(|_| bad())?,
            success: success.parse().map_err(|_| bad())?,
            fidelity: fidelity.parse().map_err(|_| bad())?,
        })
    }
}

/// Fixed-point rendering of `value` with `digits` significant digits.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), value);
    }
    // Round in scientific form first so the exponent reflects any carry.
    let rounded: f64 = format!("{:.*e}", digits - 1, value).parse().expect("valid float");
    let exponent = rounded.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    format!("{rounded:.decimals$}")
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{CSV_HEADER}").map_err(io)?;
    for r in records {
        writeln!(w, "{}", r.to_csv_row()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let io = |e| Error::io(path, e);
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == CSV_HEADER => {}
        Some(Err(e)) => return Err(io(e)),
        _ => return Err(Error::Config(format!("{}: missing record header", path.display()))),
    }
    lines
        .map(|l| TrialRecord::from_csv_row(&l.map_err(io)?))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: u64,
    pub successes: u64,
    pub empirical_p: f64,
    pub analytic_p: f64,
    /// `3 sqrt(p (1 - p) / trials)` with the analytic `p`.
    pub three_sigma: f64,
    /// `None` when no trial succeeded.
    pub min_success_fidelity: Option<f64>,
    pub x_used: f64,
    pub seed: u64,
    pub verdict: Verdict,
}

impl ExperimentSummary {
    pub fn from_records(records: &[TrialRecord], analytic_p: f64, x_used: f64, seed: u64) -> Self {
        let trials = records.len() as u64;
        let successes = records.iter().filter(|r| r.success).count() as u64;
        let empirical_p = successes as f64 / trials as f64;
        let three_sigma = 3.0 * (analytic_p * (1.0 - analytic_p) / trials as f64).max(0.0).sqrt();
        let min_success_fidelity = records.iter().filter(|r| r.success).map(|r| r.fidelity).reduce(f64::min);
        let verdict = if (empirical_p - analytic_p).abs() <= three_sigma + 1e-12 {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            trials,
            successes,
            empirical_p,
            analytic_p,
            three_sigma,
            min_success_fidelity,
            x_used,
            seed,
            verdict,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("summary serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
