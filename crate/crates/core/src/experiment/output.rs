use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{ExperimentError, RunOutput, TrialResult};
use crate::ensemble::EnsembleFile;
use crate::threshold::round4;

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub best_threshold: String,
    pub best_threshold_full: f64,
    #[serde(rename = "NOG")]
    pub nog: u64,
    #[serde(rename = "NTT")]
    pub ntt: u64,
    #[serde(rename = "NFE")]
    pub nfe: u64,
}

impl From<&TrialResult> for TrialRow {
    fn from(t: &TrialResult) -> Self {
        Self {
            trial: t.trial,
            best_threshold: format!("{:.4}", round4(t.threshold)),
            best_threshold_full: t.threshold,
            nog: t.metrics.nog,
            ntt: t.metrics.ntt,
            nfe: t.metrics.nfe,
        }
    }
}

/// One line of `summary.csv`: the value at the best trial, the mean and
/// the population standard deviation over trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: &'static str,
    pub best: f64,
    pub avg: f64,
    pub sd: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Summary rows for threshold, NOG, NTT and NFE. The best trial is the one
/// with the highest threshold (lowest index on ties).
pub fn summarize(trials: &[TrialResult]) -> Vec<SummaryRow> {
    if trials.is_empty() {
        return Vec::new();
    }
    let best = trials.iter().enumerate().fold(0, |b, (i, t)| if t.threshold > trials[b].threshold { i } else { b });
    let metrics: [(&'static str, fn(&TrialResult) -> f64); 4] = [
        ("threshold", |t| t.threshold),
        ("NOG", |t| t.metrics.nog as f64),
        ("NTT", |t| t.metrics.ntt as f64),
        ("NFE", |t| t.metrics.nfe as f64),
    ];
    metrics
        .iter()
        .map(|&(metric, f)| {
            let xs: Vec<f64> = trials.iter().map(f).collect();
            let (avg, sd) = mean_sd(&xs);
            SummaryRow { metric, best: xs[best], avg, sd }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path).map(BufWriter::new).map_err(|e| ExperimentError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> ExperimentError {
    ExperimentError::io(path, std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

/// Write `results.csv`, `summary.csv`, `timing.csv`, one
/// `trace_<trial>.csv` and `ensemble_<trial>.json` per trial, and
/// `surface.csv` for surface runs. Wall-clock figures live only in
/// `timing.csv` and the traces.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    if let Some(surface) = &out.surface {
        let path = dir.join("surface.csv");
        surface.write_csv(create(&path)?).map_err(|e| csv_err(&path, e))?;
    }
    if out.trials.is_empty() {
        return Ok(());
    }
    write_rows(
        &dir.join("results.csv"),
        &["trial", "best_threshold", "best_threshold_full", "NOG", "NTT", "NFE"],
        out.trials.iter().map(TrialRow::from),
    )?;
    write_rows(&dir.join("summary.csv"), &["metric", "best", "avg", "sd"], summarize(&out.trials))?;
    let cpu: Vec<f64> = out.trials.iter().map(|t| t.metrics.cpu_seconds).collect();
    let (avg, sd) = mean_sd(&cpu);
    let timing = out
        .trials
        .iter()
        .map(|t| (t.trial.to_string(), t.metrics.cpu_seconds))
        .chain([("avg".to_string(), avg), ("sd".to_string(), sd)]);
    write_rows(&dir.join("timing.csv"), &["trial", "cpu_s"], timing)?;
    for t in &out.trials {
        let path = dir.join(format!("trace_{}.csv", t.trial));
        t.trace.write_csv(create(&path)?).map_err(|e| csv_err(&path, e))?;
        if let Some(e) = &t.ensemble {
            let path = dir.join(format!("ensemble_{}.json", t.trial));
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &EnsembleFile::from_ensemble(e, Some(t.rate)))
                .map_err(|e| ExperimentError::io(&path, e.into()))?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| ExperimentError::io(&path, e))?;
        }
    }
    Ok(())
}
