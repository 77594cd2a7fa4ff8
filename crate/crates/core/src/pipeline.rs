//! Per-day pipeline over a directory of paired tick files: ingest, fit and
//! risk for each day, monthly parameter averages, and a CoVaR series on the
//! daily closes.
//!
//! A day is the pair `<label>_1.csv`, `<label>_2.csv` (columns
//! `timestamp_ms,price`). Labels starting with `YYYY-MM` group into months.

use crate::covar::{returns, rolling_covar, CovarConfig, CovarError, CovarRow};
use crate::estimate::{covariance, fit, monthly_averages, FitOptions, FitResult, Model, PeriodAverage, WindowFit};
use crate::ingest::{ingest_pair, IngestConfig, IngestReport, RawTickSeries, TickRow};
use crate::model::EventStream;
use crate::risk::{rho_stderr, risk_summary, RiskSummary};
use crate::sim::price_path;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no input: {0} holds no <label>_1.csv / <label>_2.csv files")]
    NoInput(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tick1: f64,
    pub tick2: f64,
    pub ingest: IngestConfig,
    pub model: Model,
    pub fit: FitOptions,
    pub covar: CovarConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tick1: 0.01,
            tick2: 0.01,
            ingest: IngestConfig::default(),
            model: Model::Flocking,
            fit: FitOptions::default(),
            covar: CovarConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayFiles {
    pub label: String,
    pub first: PathBuf,
    pub second: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub label: String,
    pub reason: String,
}

/// Pairs up day files, sorted by label. Unpaired files are reported as skips.
pub fn discover(dir: &Path) -> Result<(Vec<DayFiles>, Vec<Skip>), PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut found: BTreeMap<String, [Option<PathBuf>; 2]> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".csv") else {
            continue;
        };
        let slot = if let Some(l) = stem.strip_suffix("_1") {
            Some((l, 0))
        } else {
            stem.strip_suffix("_2").map(|l| (l, 1))
        };
        if let Some((label, k)) = slot {
            found.entry(label.to_string()).or_default()[k] = Some(path.clone());
        }
    }
    if found.is_empty() {
        return Err(PipelineError::NoInput(dir.to_path_buf()));
    }
    let mut days = Vec::new();
    let mut skipped = Vec::new();
    for (label, [a, b]) in found {
        match (a, b) {
            (Some(first), Some(second)) => days.push(DayFiles { label, first, second }),
            (a, _) => skipped.push(Skip {
                reason: format!("missing {} file", if a.is_none() { "_1" } else { "_2" }),
                label,
            }),
        }
    }
    Ok((days, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayOutput {
    pub label: String,
    pub report: IngestReport,
    pub fit: FitResult,
    pub risk: RiskSummary,
    /// Delta-method standard error of the spectral radius.
    pub rho_stderr: Option<f64>,
    /// Last raw price of each series.
    pub close: [f64; 2],
}

fn read_series(path: &Path, name: &str, tick: f64) -> Result<(RawTickSeries, usize), String> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RawTickSeries::read_csv(BufReader::new(f), name, tick).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn run_day(day: &DayFiles, cfg: &PipelineConfig) -> Result<DayOutput, String> {
    let (x, d1) = read_series(&day.first, "1", cfg.tick1)?;
    let (y, d2) = read_series(&day.second, "2", cfg.tick2)?;
    let (stream, mut report) = ingest_pair(&x, &y, &cfg.ingest).map_err(|e| e.to_string())?;
    report.dropped_rows = [d1, d2];
    let fit = fit(&stream, cfg.model, None, &cfg.fit).map_err(|e| e.to_string())?;
    let risk = risk_summary(&fit.params, Some(&price_path(&stream)));
    let rho_se = covariance(&stream, &fit.params, cfg.model)
        .map(|c| rho_stderr(&fit.params, &c, cfg.model.free_indices()));
    Ok(DayOutput {
        label: day.label.clone(),
        report,
        fit,
        risk,
        rho_stderr: rho_se,
        close: [x.rows.last().unwrap().price, y.rows.last().unwrap().price],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub date: String,
    pub rho: f64,
    pub q11: f64,
    pub q22: f64,
    pub q12: f64,
    pub q21: f64,
    pub p: f64,
}

impl RiskRow {
    pub fn of(date: &str, r: &RiskSummary) -> Self {
        Self {
            date: date.to_string(),
            rho: r.rho,
            q11: r.q11,
            q22: r.q22,
            q12: r.q12,
            q21: r.q21,
            p: r.p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub days: Vec<DayOutput>,
    pub skipped: Vec<Skip>,
    pub monthly: Vec<PeriodAverage>,
    /// Rolling CoVaR on daily close returns; empty when there are too few
    /// days for one window.
    pub covar: Vec<(String, Result<CovarRow, CovarError>)>,
}

impl PipelineOutput {
    pub fn risk_rows(&self) -> Vec<RiskRow> {
        self.days.iter().map(|d| RiskRow::of(&d.label, &d.risk)).collect()
    }
}

/// Runs every day in parallel; outputs are in label order regardless of the
/// worker count. Failed days are skipped and reported.
pub fn run_pipeline(dir: &Path, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let (days, mut skipped) = discover(dir)?;
    let results: Vec<(String, Result<DayOutput, String>)> =
        days.par_iter().map(|d| (d.label.clone(), run_day(d, cfg))).collect();
    let mut out = Vec::new();
    for (label, r) in results {
        match r {
            Ok(d) => out.push(d),
            Err(reason) => skipped.push(Skip { label, reason }),
        }
    }
    skipped.sort_by(|a, b| a.label.cmp(&b.label));
    let fits: Vec<WindowFit> = out
        .iter()
        .map(|d| WindowFit {
            label: d.label.clone(),
            result: Ok(d.fit.clone()),
        })
        .collect();
    let monthly = monthly_averages(&fits);
    let covar = daily_covar(&out, &cfg.covar);
    Ok(PipelineOutput {
        days: out,
        skipped,
        monthly,
        covar,
    })
}

fn daily_covar(days: &[DayOutput], cfg: &CovarConfig) -> Vec<(String, Result<CovarRow, CovarError>)> {
    if days.len() < cfg.window + 1 {
        return Vec::new();
    }
    let closes = |k: usize| days.iter().map(|d| d.close[k]).collect::<Vec<_>>();
    let (Ok(r1), Ok(r2)) = (returns(&closes(0)), returns(&closes(1))) else {
        return Vec::new();
    };
    let dates: Vec<String> = days[1..].iter().map(|d| d.label.clone()).collect();
    rolling_covar(&dates, &r1, &r2, cfg).unwrap_or_default()
}

/// Tick-file rendering of a simulated stream: one model time unit lasts
/// `seconds_per_unit` seconds from `start_ms`, and prices are
/// `base + tick · C`. Each event becomes one row of its asset.
pub fn export_ticks(
    stream: &EventStream,
    start_ms: i64,
    seconds_per_unit: f64,
    base: [f64; 2],
    tick: [f64; 2],
) -> [RawTickSeries; 2] {
    let path = price_path(stream);
    let init = [stream.init1, stream.init2];
    let mut rows: [Vec<TickRow>; 2] = std::array::from_fn(|a| {
        vec![TickRow {
            ts_ms: start_ms,
            price: base[a] + init[a] * tick[a],
        }]
    });
    for e in &stream.events {
        let a = e.mark.asset();
        rows[a].push(TickRow {
            ts_ms: start_ms + (e.time * seconds_per_unit * 1000.0).round() as i64,
            price: base[a] + path.at(e.time)[a] * tick[a],
        });
    }
    let [r1, r2] = rows;
    [
        RawTickSeries { instrument: "1".into(), tick: tick[0], rows: r1 },
        RawTickSeries { instrument: "2".into(), tick: tick[1], rows: r2 },
    ]
}

/// Writes `<label>_1.csv` and `<label>_2.csv` into `dir`.
pub fn write_day(dir: &Path, label: &str, pair: &[RawTickSeries; 2]) -> Result<[PathBuf; 2], PipelineError> {
    let mut out = Vec::with_capacity(2);
    for (k, s) in pair.iter().enumerate() {
        let path = dir.join(format!("{label}_{}.csv", k + 1));
        let f = File::create(&path).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        s.write_csv(std::io::BufWriter::new(f)).map_err(|e| PipelineError::Io {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
        out.push(path);
    }
    Ok([out[0].clone(), out[1].clone()])
}
