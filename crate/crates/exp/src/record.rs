//! Experiment records and their CSV / JSON-lines encodings.
//!
//! Reals are written with 17 significant digits, so parsing an emitted file
//! gives back the exact bits.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use crate::config::Format;
use crate::error::{ExpError, Result};

pub const CSV_HEADER: &str = "experiment,n,sample_index,seed_used,estimator,value,elapsed_ms";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub n: usize,
    pub sample_index: usize,
    pub seed_used: u64,
    pub estimator: String,
    pub value: f64,
    pub elapsed_ms: f64,
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(ExpError::Parse(format!("name `{name}` is not a plain identifier")))
    }
}

impl ExperimentRecord {
    fn check(&self) -> Result<()> {
        check_name(&self.experiment)?;
        check_name(&self.estimator)?;
        if !self.value.is_finite() || !self.elapsed_ms.is_finite() {
            return Err(ExpError::Invariant(format!(
                "non-finite value in {} n={} sample={}",
                self.estimator, self.n, self.sample_index
            )));
        }
        Ok(())
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.experiment,
            self.n,
            self.sample_index,
            self.seed_used,
            self.estimator,
            real(self.value),
            real(self.elapsed_ms)
        )
    }

    /// One JSON object with keys in header order.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"experiment\":\"{}\",\"n\":{},\"sample_index\":{},\"seed_used\":{},\"estimator\":\"{}\",\"value\":{},\"elapsed_ms\":{}}}",
            self.experiment,
            self.n,
            self.sample_index,
            self.seed_used,
            self.estimator,
            real(self.value),
            real(self.elapsed_ms)
        )
    }
}

pub fn emit<W: Write>(records: &[ExperimentRecord], format: Format, out: &mut W) -> Result<()> {
    for r in records {
        r.check()?;
    }
    if format == Format::Csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for r in records {
        let line = match format {
            Format::Csv => r.to_csv_line(),
            Format::Json => r.to_json_line(),
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn emit_to_path(records: &[ExperimentRecord], format: Format, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    emit(records, format, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn field<T: std::str::FromStr>(value: Option<&str>, what: &str, line: usize) -> Result<T> {
    value
        .ok_or_else(|| ExpError::Parse(format!("line {line}: missing {what}")))?
        .parse()
        .map_err(|_| ExpError::Parse(format!("line {line}: bad {what}")))
}

pub fn parse_csv<R: BufRead>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut lines = input.lines();
    if lines.next().transpose()?.as_deref() != Some(CSV_HEADER) {
        return Err(ExpError::Parse("missing CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let mut parts = line.split(',');
        let record = ExperimentRecord {
            experiment: field(parts.next(), "experiment", lineno)?,
            n: field(parts.next(), "n", lineno)?,
            sample_index: field(parts.next(), "sample_index", lineno)?,
            seed_used: field(parts.next(), "seed_used", lineno)?,
            estimator: field(parts.next(), "estimator", lineno)?,
            value: field(parts.next(), "value", lineno)?,
            elapsed_ms: field(parts.next(), "elapsed_ms", lineno)?,
        };
        if parts.next().is_some() {
            return Err(ExpError::Parse(format!("line {lineno}: too many fields")));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn parse_json_lines<R: BufRead>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let r: ExperimentRecord = serde_json::from_str(&line)
            .map_err(|e| ExpError::Parse(format!("line {}: {e}", i + 1)))?;
        out.push(r);
    }
    Ok(out)
}

pub fn parse<R: BufRead>(input: R, format: Format) -> Result<Vec<ExperimentRecord>> {
    match format {
        Format::Csv => parse_csv(input),
        Format::Json => parse_json_lines(input),
    }
}
