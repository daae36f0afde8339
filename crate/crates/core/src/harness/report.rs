//! Rate reports and their CSV/JSON artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::{Criterion, RateFit, Verdict};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "experiment_id,theta,dim,K,q,ell,t,error,scaled_error,predicted_exponent,fitted_slope,residual,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t: f64,
    pub error: f64,
    pub scaled_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub rows: Vec<RateRow>,
    pub predicted_exponent: f64,
    pub fit: Option<RateFit>,
    pub criterion: Criterion,
    pub verdict: Verdict,
    /// Positive when the criterion holds with room to spare.
    pub margin: f64,
    /// Set when the run stopped early; `rows` then holds what was computed.
    pub aborted: Option<String>,
}

impl RateReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.and_then(|f| f.slope())
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let slope = match self.slope() {
            Some(s) => format!("{s:.3}"),
            None => "-".into(),
        };
        format!(
            "{}: slope {slope} (predicted -{:.3}), {} by {:.3}{}",
            self.config.id,
            self.predicted_exponent,
            self.verdict.as_str(),
            self.margin,
            self.aborted.as_ref().map(|a| format!(" [aborted: {a}]")).unwrap_or_default()
        )
    }
}

/// Numbers in CSV: shortest round-trip form, `inf` for infinity, empty for absent.
fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn report_csv(report: &RateReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    let fit = report.fit;
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.id,
            num(c.theta),
            c.dim,
            num(c.k),
            num(c.q),
            num(c.ell),
            num(r.t),
            num(r.error),
            num(r.scaled_error),
            num(report.predicted_exponent),
            opt(fit.and_then(|f| f.slope())),
            opt(fit.and_then(|f| f.residual())),
            report.verdict.as_str()
        );
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write `<id>.csv` and `<id>.json` into `dir`; returns the two paths.
pub fn emit_report(report: &RateReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if report.rows.is_empty() && report.aborted.is_none() {
        return Err(Error::NoSampleTimes);
    }
    mkdir(dir)?;
    let csv = dir.join(format!("{}.csv", report.config.id));
    write(&csv, &report_csv(report))?;
    let json = dir.join(format!("{}.json", report.config.id));
    let body = serde_json::to_string_pretty(report).map_err(|e| Error::Parse {
        path: json.clone(),
        message: e.to_string(),
    })?;
    write(&json, &body)?;
    Ok((csv, json))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub csv: String,
    pub report: String,
    pub verdict: Verdict,
    pub fitted_slope: Option<f64>,
    pub predicted_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchIndex {
    pub experiments: Vec<IndexEntry>,
    pub all_passed: bool,
}

pub const INDEX_FILE: &str = "index.json";

/// Emit every report and a combined `index.json` in `dir`.
pub fn emit_batch(reports: &[RateReport], dir: &Path) -> Result<BatchIndex> {
    let mut entries = Vec::new();
    for r in reports {
        let (csv, json) = emit_report(r, dir)?;
        let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
        entries.push(IndexEntry {
            id: r.config.id.clone(),
            csv: name(&csv),
            report: name(&json),
            verdict: r.verdict,
            fitted_slope: r.slope(),
            predicted_exponent: r.predicted_exponent,
        });
    }
    let index = BatchIndex {
        all_passed: entries.iter().all(|e| e.verdict.passed()),
        experiments: entries,
    };
    let path = dir.join(INDEX_FILE);
    let body = serde_json::to_string_pretty(&index).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    write(&path, &body)?;
    Ok(index)
}

/// Reports named by a batch index in `dir`.
pub fn read_batch(dir: &Path) -> Result<Vec<RateReport>> {
    let path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: BatchIndex = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    index
        .experiments
        .iter()
        .map(|e| {
            let p = dir.join(&e.report);
            let text = std::fs::read_to_string(&p).map_err(|err| Error::io(&p, err))?;
            serde_json::from_str(&text).map_err(|err| Error::Parse {
                path: p.clone(),
                message: err.to_string(),
            })
        })
        .collect()
}
