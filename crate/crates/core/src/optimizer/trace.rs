use std::io::Write;

use serde::Serialize;

/// Per-generation progress of one optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_threshold: f64,
    #[serde(rename = "SR")]
    pub sr: Option<f64>,
    #[serde(rename = "NTT_cum")]
    pub ntt_cum: u64,
    #[serde(rename = "NFE_cum")]
    pub nfe_cum: u64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
}

impl OptimizationTrace {
    /// The trace with wall-clock columns zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Vec<TraceRow> {
        self.rows.iter().map(|r| TraceRow { elapsed_s: 0.0, ..r.clone() }).collect()
    }

    pub fn best_thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.best_threshold)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            out.write_record(["generation", "best_threshold", "SR", "NTT_cum", "NFE_cum", "elapsed_s"])?;
        }
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}
