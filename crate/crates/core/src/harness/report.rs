//! CSV, JSON manifest and plot output for a covariance report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{CovarianceReport, MonotoneCheck, ReportRow, SeedRecord};
use super::plot::{line_chart, Series};
use crate::linearized::SemigroupEstimate;
use crate::Result;

pub const CSV_HEADER: &str =
    "epsilon,t,cov,cov_stderr,semigroup,sg_stderr,discrepancy,upsilon_fail_rate,recollision_rate";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "nan".into()
    }
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.epsilon,
            r.t,
            num(r.cov),
            num(r.cov_stderr),
            num(r.semigroup),
            num(r.sg_stderr),
            num(r.discrepancy),
            num(r.upsilon_fail_rate),
            num(r.recollision_rate)
        );
    }
    s
}

/// Everything needed to rerun and audit an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub parallel: bool,
    pub config: ExperimentConfig,
    pub config_text: String,
    pub seeds: Vec<SeedRecord>,
    pub rows: Vec<ReportRow>,
    pub semigroup: Vec<SemigroupEstimate>,
    pub monotone: Vec<MonotoneCheck>,
    pub failures: Vec<String>,
    pub within_theorem_hypotheses: bool,
}

impl Manifest {
    pub fn new(report: &CovarianceReport) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").into(),
            parallel: cfg!(feature = "parallel"),
            config: report.config.clone(),
            config_text: report.config.to_text(),
            seeds: report.seeds.clone(),
            rows: report.rows.clone(),
            semigroup: report.semigroup.clone(),
            monotone: report.monotone.clone(),
            failures: report.failures.clone(),
            within_theorem_hypotheses: report.config.dim.within_theorem_hypotheses(),
        }
    }
}

/// Reads the configuration back from a manifest written by [`emit_report`].
pub fn load_manifest(path: &Path) -> Result<ExperimentConfig> {
    Ok(read_manifest(path)?.config)
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Rebuilds the full report stored in a manifest.
pub fn load_report(path: &Path) -> Result<CovarianceReport> {
    let m = read_manifest(path)?;
    Ok(CovarianceReport {
        config: m.config,
        rows: m.rows,
        semigroup: m.semigroup,
        monotone: m.monotone,
        failures: m.failures,
        seeds: m.seeds,
    })
}

fn plots(report: &CovarianceReport) -> Vec<(&'static str, String)> {
    let cfg = &report.config;
    let mut by_eps: Vec<Series> = cfg
        .epsilons
        .iter()
        .map(|&e| Series {
            label: format!("eps = {e}"),
            points: report
                .rows
                .iter()
                .filter(|r| r.epsilon == e)
                .map(|r| (r.t, r.cov, r.cov_stderr))
                .collect(),
            dashed: false,
        })
        .collect();
    by_eps.push(Series {
        label: "semigroup".into(),
        points: report
            .semigroup
            .iter()
            .map(|s| (s.t, s.value, s.stderr))
            .collect(),
        dashed: true,
    });
    let by_t: Vec<Series> = cfg
        .times
        .iter()
        .map(|&t| Series {
            label: format!("t = {t}"),
            points: report
                .rows
                .iter()
                .filter(|r| r.t == t)
                .map(|r| (r.epsilon, r.discrepancy, r.discrepancy_stderr()))
                .collect(),
            dashed: false,
        })
        .collect();
    vec![
        (
            "covariance.svg",
            line_chart(
                &format!("covariance of {} and {}", cfg.h, cfg.g),
                "t",
                "covariance",
                &by_eps,
            ),
        ),
        (
            "discrepancy.svg",
            line_chart("|covariance - semigroup|", "epsilon", "discrepancy", &by_t),
        ),
    ]
}

/// Writes `report.csv` and/or `manifest.json` (plus SVG plots) into `dir`
/// and returns the written paths.
pub fn emit_report(
    report: &CovarianceReport,
    dir: &Path,
    formats: &[ReportFormat],
    with_plots: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            ReportFormat::Csv => ("report.csv", to_csv(&report.rows)),
            ReportFormat::Json => (
                "manifest.json",
                serde_json::to_string_pretty(&Manifest::new(report))?,
            ),
        };
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    if with_plots {
        for (name, svg) in plots(report) {
            let p = dir.join(name);
            std::fs::write(&p, svg)?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        let s = to_csv(&[]);
        assert_eq!(s, format!("{CSV_HEADER}\n"));
        assert_eq!(CSV_HEADER.split(',').count(), 9);
    }
}
