use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Relative slack of every check.
pub const PASS_REL_SLACK: f64 = 1e-9;
/// Absolute slack of every check.
pub const PASS_ABS_SLACK: f64 = 1e-12;

pub fn passes(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + PASS_REL_SLACK) + PASS_ABS_SLACK
}

/// `{:.16e}` keeps 17 significant digits.
fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn de_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Outcome of one inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: BTreeMap<String, String>,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub margin: f64,
    pub pass: bool,
    /// Set when the check could not be run; such records carry zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, params: BTreeMap<String, String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), params, lhs, rhs, margin: rhs - lhs, pass: passes(lhs, rhs), skipped: None }
    }

    pub fn skip(name: impl Into<String>, params: BTreeMap<String, String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params,
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            pass: true,
            skipped: Some(reason.into()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }

    pub fn is_failure(&self) -> bool {
        !self.is_skipped() && !self.pass
    }

    /// `pass` as it follows from `lhs`, `rhs` and the fixed slack.
    pub fn recomputed_pass(&self) -> bool {
        self.is_skipped() || passes(self.lhs, self.rhs)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Summary {
    pub fn tally(records: &[CheckRecord]) -> Self {
        let skipped = records.iter().filter(|r| r.is_skipped()).count();
        let failed = records.iter().filter(|r| r.is_failure()).count();
        Self { total: records.len(), passed: records.len() - skipped - failed, failed, skipped }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: ExperimentConfig, records: Vec<CheckRecord>) -> Self {
        let summary = Summary::tally(&records);
        Self { version: env!("CARGO_PKG_VERSION").to_string(), config, records, summary }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Parse(format!("unknown report format `{other}`"))),
        }
    }
}

const CSV_HEADER: [&str; 7] = ["name", "params", "lhs", "rhs", "margin", "pass", "skipped"];

fn params_to_text(params: &BTreeMap<String, String>) -> String {
    params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn params_from_text(text: &str) -> Result<BTreeMap<String, String>> {
    text.split(';')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("bad parameter `{kv}`")))
        })
        .collect()
}

fn num_text(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_report(&mut out, report, format)?;
    Ok(out)
}

pub fn write_report<W: Write>(w: W, report: &Report, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(CSV_HEADER)?;
            for r in &report.records {
                csv.write_record([
                    r.name.clone(),
                    params_to_text(&r.params),
                    num_text(r.lhs),
                    num_text(r.rhs),
                    num_text(r.margin),
                    r.pass.to_string(),
                    r.skipped.clone().unwrap_or_default(),
                ])?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}

pub fn parse_report_json(bytes: &[u8]) -> Result<Report> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Reads the record table written by the CSV format.
pub fn parse_records_csv(bytes: &[u8]) -> Result<Vec<CheckRecord>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    rdr.records()
        .map(|row| {
            let row = row?;
            Ok(CheckRecord {
                name: row[0].to_string(),
                params: params_from_text(&row[1])?,
                lhs: num(&row[2])?,
                rhs: num(&row[3])?,
                margin: num(&row[4])?,
                pass: row[5].parse().map_err(|_| Error::Parse(format!("bad pass flag `{}`", &row[5])))?,
                skipped: (!row[6].is_empty()).then(|| row[6].to_string()),
            })
        })
        .collect()
}
