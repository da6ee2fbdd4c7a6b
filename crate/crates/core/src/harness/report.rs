use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CurveRecord, CurveResult};
use crate::error::{Error, Result};
use crate::training::{MetricKind, TrainMode};

pub const CURVE_CSV_HEADER: [&str; 6] = ["mode", "train_size", "trial", "metric", "value", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { n, mean, std, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub mode: TrainMode,
    pub train_size: usize,
    pub metric: MetricKind,
    #[serde(flatten)]
    pub value: Stats,
    pub accuracy: Stats,
    /// Absent when some trial had a single-class test set.
    pub auc: Option<Stats>,
}

/// Per-(mode, size) statistics over trials, in record order.
pub fn summarize(result: &CurveResult) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut i = 0;
    let recs = &result.records;
    while i < recs.len() {
        let key = (recs[i].mode, recs[i].train_size);
        let mut j = i;
        while j < recs.len() && (recs[j].mode, recs[j].train_size) == key {
            j += 1;
        }
        let values: Vec<f64> = recs[i..j].iter().map(|r| r.value).collect();
        let details = result.details.get(i..j).unwrap_or(&[]);
        let acc: Vec<f64> = details.iter().map(|d| d.accuracy).collect();
        let auc: Option<Vec<f64>> = details.iter().map(|d| d.auc).collect();
        out.push(CellSummary {
            mode: key.0,
            train_size: key.1,
            metric: recs[i].metric,
            value: Stats::of(&values).expect("non-empty cell"),
            accuracy: Stats::of(&acc).unwrap_or(Stats::of(&values).expect("non-empty cell")),
            auc: auc.and_then(|a| Stats::of(&a)),
        });
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub curve_csv: PathBuf,
    pub summary_json: PathBuf,
    pub config_json: PathBuf,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `curve.csv`, `curve_summary.json` and `config.json` into `out_dir`.
pub fn emit_report(result: &CurveResult, out_dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        curve_csv: dir.join("curve.csv"),
        summary_json: dir.join("curve_summary.json"),
        config_json: dir.join("config.json"),
    };

    let csv_err = |e: csv::Error| Error::Csv {
        path: files.curve_csv.clone(),
        source: e,
    };
    let mut w = csv::Writer::from_path(&files.curve_csv).map_err(csv_err)?;
    w.write_record(CURVE_CSV_HEADER).map_err(csv_err)?;
    for r in &result.records {
        w.write_record([
            r.mode.as_str().to_string(),
            r.train_size.to_string(),
            r.trial.to_string(),
            r.metric.as_str().to_string(),
            // shortest round-trip representation
            r.value.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&files.curve_csv, e))?;

    write_json(&files.summary_json, &summarize(result))?;
    let echo = serde_json::json!({
        "config": result.config,
        "validation": "redrawn from the pool for every (size, trial); shared across modes",
        "test_ids": result.test_ids,
        "cells": result.records.iter().zip(&result.details).map(|(r, d)| serde_json::json!({
            "mode": r.mode,
            "train_size": r.train_size,
            "trial": r.trial,
            "seed": r.seed,
            "accuracy": d.accuracy,
            "auc": d.auc,
            "best_epoch": d.best_epoch,
            "epochs_run": d.epochs_run,
            "train_ids": d.train_ids,
            "val_ids": d.val_ids,
        })).collect::<Vec<_>>(),
    });
    write_json(&files.config_json, &echo)?;
    Ok(files)
}

/// Parses a `curve.csv` back into records.
pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<CurveRecord>> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != CURVE_CSV_HEADER {
        return Err(Error::Schema(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
