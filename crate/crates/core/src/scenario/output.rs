//! Tabulated experiment results and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Significant digits of every number written to CSV or printed by the CLI.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed. `-0` prints as `0`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= p as i32 {
        format!(
            "{}e{}{:02}",
            trim_zeros(mant),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    /// Solver that produced the row (`closed-form`, `dual-subgradient`, ...).
    pub method: String,
    /// One value per entry of [`ExperimentResult::columns`].
    pub values: Vec<f64>,
    /// Harvesting ratio of every SU at this point.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    /// Names of the swept parameters followed by the metrics.
    pub columns: Vec<String>,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentResult {
    pub fn new(experiment: &str, seed: u64, config_hash: String, columns: &[&str]) -> Self {
        ExperimentResult {
            experiment: experiment.to_string(),
            seed,
            config_hash,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Values of column `name` in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// Rows whose column `name` equals `value`.
    pub fn filter(&self, name: &str, value: f64) -> Vec<&ExperimentRow> {
        match self.columns.iter().position(|c| c == name) {
            Some(k) => self.rows.iter().filter(|r| r.values[k] == value).collect(),
            None => Vec::new(),
        }
    }

    pub fn header(&self) -> String {
        let mut h = String::from("experiment,seed,config_hash,method");
        for c in &self.columns {
            h.push(',');
            h.push_str(c);
        }
        h.push_str(",theta");
        h
    }

    /// CSV text: a header and one line per row. The `theta` column joins the
    /// per-SU ratios with `;`.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            write!(
                out,
                "{},{},{},{}",
                self.experiment, self.seed, self.config_hash, r.method
            )
            .unwrap();
            for v in &r.values {
                out.push(',');
                out.push_str(&format_sig(*v));
            }
            let theta: Vec<String> = r.theta.iter().map(|t| format_sig(*t)).collect();
            out.push(',');
            out.push_str(&theta.join(";"));
            out.push('\n');
        }
        out
    }
}

pub fn write_results(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, result.to_csv())?;
    Ok(())
}

/// Checks that every data line of `csv` carries `expected_hash`; reports the
/// first offending line (1-based, counting the header).
pub fn check_config_hash(csv: &str, expected_hash: &str) -> Result<()> {
    let mut lines = csv.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let col = header
        .split(',')
        .position(|c| c == "config_hash")
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "no config_hash column".into(),
        })?;
    for (n, line) in lines {
        match line.split(',').nth(col) {
            Some(h) if h == expected_hash => {}
            Some(h) => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("config hash {h} does not match {expected_hash}"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "missing config_hash field".into(),
                })
            }
        }
    }
    Ok(())
}
