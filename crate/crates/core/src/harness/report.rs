//! CSV / JSON output and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{SerReport, SerRow};
use super::Scenario;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "receiver,snr_db,stream,ser,trials,overhead_pct,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config("format", format!("unknown format `{other}`"))),
        }
    }
}

/// `%g` with six significant digits.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding can bump the exponent (9.999995 -> 10.0000)
    let sci = format!("{:.5e}", x);
    let (mant, e) = sci.split_once('e').expect("scientific format");
    let e: i32 = e.parse().expect("exponent");
    let exp = if e != exp { e } else { exp };
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The SER table as CSV.
pub fn to_csv(report: &SerReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.receiver,
            fmt_g6(r.snr_db),
            r.stream,
            fmt_g6(r.ser),
            r.trials,
            fmt_g6(r.overhead_pct),
            r.seed
        )
        .expect("writing to a String");
    }
    out
}

/// Consistency of one row's spread with binomial counting statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialCheck {
    pub receiver: String,
    pub snr_db: f64,
    pub stream: String,
    pub errors: u64,
    pub symbols: u64,
    /// Absent when no trial contributed symbols.
    pub binomial_std_err: Option<f64>,
    pub trial_std_err: Option<f64>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub excluded_trials: u64,
    pub binomial_check: Vec<BinomialCheck>,
}

impl Manifest {
    pub fn new(scenario: &Scenario, report: &SerReport) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: scenario.seed,
            scenario: scenario.clone(),
            excluded_trials: report.rows.iter().map(|r| r.excluded as u64).sum(),
            binomial_check: report.rows.iter().map(check_of).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

fn check_of(r: &SerRow) -> BinomialCheck {
    BinomialCheck {
        receiver: r.receiver.to_string(),
        snr_db: r.snr_db,
        stream: r.stream.clone(),
        errors: r.errors,
        symbols: r.symbols,
        binomial_std_err: Some(r.binomial_std_err).filter(|v| v.is_finite()),
        trial_std_err: Some(r.trial_std_err).filter(|v| v.is_finite()),
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    manifest: &'a Manifest,
    rows: &'a [SerRow],
}

/// Writes the report to `out`. CSV output gets its manifest next to it
/// (`<stem>.manifest.json`); JSON output embeds it. Returns the files written.
pub fn emit_report(report: &SerReport, scenario: &Scenario, out: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let manifest = Manifest::new(scenario, report);
    let write = |path: &Path, text: &str| fs::write(path, text).map_err(|e| Error::io(path, e));
    match format {
        Format::Csv => {
            write(out, &to_csv(report))?;
            let mpath = manifest_path(out);
            write(&mpath, &manifest.to_json()?)?;
            Ok(vec![out.to_path_buf(), mpath])
        }
        Format::Json => {
            let doc = JsonReport {
                manifest: &manifest,
                rows: &report.rows,
            };
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            write(out, &text)?;
            Ok(vec![out.to_path_buf()])
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (23.809523809, "23.8095"),
            (-3.5, "-3.5"),
            (9.9999996, "10"),
            (999999.7, "1e+06"),
            (18.0, "18"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g6(x), s, "{x}");
        }
    }

    #[test]
    fn format_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
