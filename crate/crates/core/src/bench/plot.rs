use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::BenchError;
use crate::solvers::SolverTrace;

/// A trace and the reference value its gap is measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub instance: String,
    pub label: String,
    pub best_known: f64,
    pub trace: SolverTrace,
}

#[derive(Serialize)]
struct PlotRow {
    elapsed_s: f64,
    matvecs: f64,
    objective: f64,
    gap: f64,
}

/// Writes `<instance>__<label>.csv` with `elapsed_s, matvecs, objective,
/// gap` per series, where `gap = objective - best_known`. Plot gap against
/// time on log-log axes. Empty traces are skipped with a warning.
pub fn emit_plot_data(series: &[PlotSeries], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in series {
        if s.trace.samples.is_empty() {
            log::warn!("{} / {}: empty trace, no plot data", s.instance, s.label);
            continue;
        }
        let path = dir.join(format!("{}__{}.csv", s.instance, s.label));
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        for p in &s.trace.samples {
            w.serialize(PlotRow {
                elapsed_s: p.elapsed_s,
                matvecs: p.matvecs,
                objective: p.objective,
                gap: p.objective - s.best_known,
            })?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
