use rayon::prelude::*;
use serde::Serialize;

use super::{run_seed, Algorithm, ExperimentConfig, Hyper, Phase, RunOutcome, RunSpec, Scoring};
use crate::error::{Error, Result};
use crate::metrics::{nrmse, rmse};
use crate::signal::{make_partition, MarkerRecord};

/// Cross-validation score of one grid tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvEntry {
    pub tuple: usize,
    pub hyper: Hyper,
    /// Means over the non-diverged runs; `None` when every run diverged.
    pub mean_rmse: Option<f64>,
    pub mean_nrmse: Option<f64>,
    pub n_runs: usize,
    pub n_diverged: usize,
}

/// The full grid surface for one (sequence, horizon) and the selected tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub entries: Vec<CvEntry>,
    pub chosen: usize,
}

impl CvResult {
    pub fn chosen_entry(&self) -> &CvEntry {
        &self.entries[self.chosen]
    }

    pub fn chosen_hyper(&self) -> Hyper {
        self.chosen_entry().hyper
    }
}

/// Grid search for every configured horizon of one sequence.
pub fn grid_search(
    algorithm: Algorithm,
    record: &MarkerRecord,
    sequence: usize,
    config: &ExperimentConfig,
) -> Result<Vec<CvResult>> {
    config
        .horizons
        .iter()
        .map(|&seconds| {
            let h = horizon_steps(record, seconds)?;
            grid_search_horizon(algorithm, record, sequence, h, config)
        })
        .collect()
}

pub(crate) fn horizon_steps(record: &MarkerRecord, seconds: f64) -> Result<usize> {
    match record.steps(seconds) {
        0 => Err(Error::InvalidParameter(format!(
            "horizon {seconds} s is shorter than one sample of {:?}",
            record.label
        ))),
        h => Ok(h),
    }
}

/// Scores every tuple over `n_cv` seeded runs (one for deterministic
/// methods) on the cross-validation range and picks the lowest mean RMSE.
pub fn grid_search_horizon(
    algorithm: Algorithm,
    record: &MarkerRecord,
    sequence: usize,
    horizon: usize,
    config: &ExperimentConfig,
) -> Result<CvResult> {
    let partition = make_partition(record, algorithm.partition_scheme())?;
    let tuples = config.grid(algorithm).tuples(algorithm)?;
    let n_runs = config.cv_runs(algorithm);
    let tasks: Vec<(usize, usize)> = (0..tuples.len())
        .flat_map(|g| (0..n_runs).map(move |r| (g, r)))
        .collect();

    let scores = tasks
        .par_iter()
        .map(|&(g, r)| {
            let spec = RunSpec {
                algorithm,
                hyper: tuples[g],
                horizon,
                seed: run_seed(config.master_seed, Phase::CrossValidation, sequence, horizon, g, r),
                scoring: Scoring::CrossValidation,
                tau: config.tau,
            };
            match super::run_sequence_online(record, &partition, &spec)? {
                RunOutcome::Completed(out) => Ok(Some((rmse(&out.trace)?, nrmse(&out.trace).ok()))),
                RunOutcome::Diverged { .. } => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let entries: Vec<CvEntry> = tuples
        .iter()
        .enumerate()
        .map(|(g, &hyper)| {
            let runs = &scores[g * n_runs..(g + 1) * n_runs];
            let ok: Vec<_> = runs.iter().flatten().collect();
            let n_ok = ok.len();
            let mean = |v: Vec<f64>| (n_ok > 0).then(|| v.iter().sum::<f64>() / n_ok as f64);
            let nrmses: Option<Vec<f64>> = ok.iter().map(|s| s.1).collect();
            CvEntry {
                tuple: g,
                hyper,
                mean_rmse: mean(ok.iter().map(|s| s.0).collect()),
                mean_nrmse: nrmses.and_then(mean),
                n_runs,
                n_diverged: n_runs - n_ok,
            }
        })
        .collect();

    for e in entries.iter().filter(|e| e.mean_rmse.is_none()) {
        log::warn!(
            "{algorithm} on {:?}, h={horizon}: every run of {} diverged; tuple excluded",
            record.label,
            e.hyper
        );
    }
    let chosen = entries
        .iter()
        .filter_map(|e| e.mean_rmse.map(|m| (m, e)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.hyper.tie_break_cmp(&b.1.hyper)))
        .map(|(_, e)| e.tuple)
        .ok_or_else(|| {
            Error::Diverged(format!(
                "{algorithm} on {:?}, h={horizon}: no grid tuple produced a finite run",
                record.label
            ))
        })?;
    Ok(CvResult {
        algorithm,
        horizon,
        entries,
        chosen,
    })
}
