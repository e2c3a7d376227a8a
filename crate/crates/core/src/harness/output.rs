use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Algorithm, Cell, CurveRow, CvResult, EvalResult, MetricSummary, SummaryRow};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::signal::BreathingClass;

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SurfaceRow {
    tuple: usize,
    hidden: Option<usize>,
    shl: usize,
    eta: Option<f64>,
    sigma_init: Option<f64>,
    mean_rmse: Option<f64>,
    mean_nrmse: Option<f64>,
    n_runs: usize,
    n_diverged: usize,
    chosen: bool,
}

/// One row per grid tuple, marking the selected one.
pub fn write_cv_surface(path: impl AsRef<Path>, cv: &CvResult) -> Result<()> {
    write_rows(
        path.as_ref(),
        cv.entries.iter().map(|e| SurfaceRow {
            tuple: e.tuple,
            hidden: e.hyper.hidden,
            shl: e.hyper.shl,
            eta: e.hyper.eta,
            sigma_init: e.hyper.sigma_init,
            mean_rmse: e.mean_rmse,
            mean_nrmse: e.mean_nrmse,
            n_runs: e.n_runs,
            n_diverged: e.n_diverged,
            chosen: e.tuple == cv.chosen,
        }),
    )
}

#[derive(Serialize)]
struct RunRow {
    run: usize,
    seed: u64,
    diverged_at: Option<usize>,
    mae: Option<f64>,
    rmse: Option<f64>,
    nrmse: Option<f64>,
    max_error: Option<f64>,
    jitter: Option<f64>,
}

/// Per-run metrics of one evaluated condition; diverged runs have empty
/// metric fields.
pub fn write_eval_runs(path: impl AsRef<Path>, eval: &EvalResult) -> Result<()> {
    write_rows(
        path.as_ref(),
        eval.runs.iter().map(|r| RunRow {
            run: r.run,
            seed: r.seed,
            diverged_at: r.diverged_at,
            mae: r.metrics.map(|m| m.mae),
            rmse: r.metrics.map(|m| m.rmse),
            nrmse: r.metrics.map(|m| m.nrmse),
            max_error: r.metrics.map(|m| m.max_error),
            jitter: r.metrics.map(|m| m.jitter),
        }),
    )
}

pub fn write_loss_trace(path: impl AsRef<Path>, losses: &[f64]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        step: usize,
        mean_loss: f64,
    }
    write_rows(
        path.as_ref(),
        losses.iter().enumerate().map(|(step, &mean_loss)| Row { step, mean_loss }),
    )
}

#[derive(Serialize, Deserialize)]
struct CellRow {
    algorithm: Algorithm,
    sequence: String,
    breathing_class: BreathingClass,
    horizon_seconds: f64,
    n_diverged: usize,
    metric: Metric,
    mean: f64,
    half_range: Option<f64>,
    n_runs: usize,
}

/// Long format: one row per (cell, metric).
pub fn write_cells(path: impl AsRef<Path>, cells: &[Cell]) -> Result<()> {
    write_rows(
        path.as_ref(),
        cells.iter().flat_map(|c| {
            c.metrics.iter().map(|m| CellRow {
                algorithm: c.algorithm,
                sequence: c.sequence.clone(),
                breathing_class: c.breathing_class,
                horizon_seconds: c.horizon_seconds,
                n_diverged: c.n_diverged,
                metric: m.metric,
                mean: m.mean,
                half_range: m.half_range,
                n_runs: m.n_runs,
            })
        }),
    )
}

pub fn read_cells(path: impl AsRef<Path>) -> Result<Vec<Cell>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut cells: Vec<Cell> = Vec::new();
    let mut index: BTreeMap<(Algorithm, String, u64), usize> = BTreeMap::new();
    for (i, row) in reader.deserialize::<CellRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.as_ref().to_path_buf(),
            row: i + 2,
            message: e.to_string(),
        })?;
        let key = (row.algorithm, row.sequence.clone(), row.horizon_seconds.to_bits());
        let at = *index.entry(key).or_insert_with(|| {
            cells.push(Cell {
                algorithm: row.algorithm,
                sequence: row.sequence.clone(),
                breathing_class: row.breathing_class,
                horizon_seconds: row.horizon_seconds,
                n_diverged: row.n_diverged,
                metrics: Vec::new(),
            });
            cells.len() - 1
        });
        cells[at].metrics.push(MetricSummary {
            metric: row.metric,
            mean: row.mean,
            half_range: row.half_range,
            n_runs: row.n_runs,
        });
    }
    Ok(cells)
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}

pub fn write_curves(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<()> {
    write_rows(path.as_ref(), rows)
}
