use std::path::{Path, PathBuf};

use serde::Serialize;

use super::cv::horizon_steps;
use super::{
    aggregate, evaluate, grid_search_horizon, load_manifest, write_cells, write_curves, write_cv_surface,
    write_eval_runs, write_loss_trace, write_summary, Algorithm, Cell, ExperimentConfig, Hyper, Manifest, Report,
};
use crate::error::Result;
use crate::signal::{fit_normalizer, make_partition, BreathingClass, MarkerRecord, Normalizer};

#[derive(Debug, Clone, Serialize)]
struct SequenceInfo {
    label: String,
    path: PathBuf,
    breathing_class: BreathingClass,
    n_steps: usize,
    sample_period: f64,
    normalizer_online: Normalizer,
    normalizer_offline: Normalizer,
}

#[derive(Debug, Clone, Serialize)]
struct ConditionInfo {
    algorithm: Algorithm,
    sequence: String,
    horizon_seconds: f64,
    horizon_steps: usize,
    chosen: Hyper,
    cv_rmse: Option<f64>,
    test_runs: usize,
    test_diverged: usize,
}

#[derive(Debug, Clone, Serialize)]
struct RunManifest {
    crate_version: &'static str,
    seed_scheme: &'static str,
    config: ExperimentConfig,
    manifest: Manifest,
    sequences: Vec<SequenceInfo>,
    conditions: Vec<ConditionInfo>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub cells: Vec<Cell>,
    pub report: Report,
}

fn file_stem(algorithm: Algorithm, label: &str, seconds: f64) -> String {
    let label: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{algorithm}_{label}_h{}ms", (seconds * 1000.0).round() as i64)
}

/// Runs cross-validation and evaluation for every configured algorithm,
/// sequence and horizon, writes all CSV outputs plus `run_manifest.toml`
/// under the output directory, and returns the aggregated report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let manifest = load_manifest(&config.manifest)?;
    let records = manifest.load_records()?;
    let out = config.output_dir.as_path();
    std::fs::create_dir_all(out)?;

    let mut sequences = Vec::new();
    for (entry, record) in manifest.sequences.iter().zip(&records) {
        let online = make_partition(record, Algorithm::Uoro.partition_scheme())?;
        let offline = make_partition(record, Algorithm::Linreg.partition_scheme())?;
        sequences.push(SequenceInfo {
            label: entry.label.clone(),
            path: entry.path.clone(),
            breathing_class: entry.breathing_class,
            n_steps: record.len(),
            sample_period: record.sample_period(),
            normalizer_online: fit_normalizer(record, online.train)?,
            normalizer_offline: fit_normalizer(record, offline.train)?,
        });
    }

    let mut cells = Vec::new();
    let mut conditions = Vec::new();
    for &algorithm in &config.algorithms {
        for (i, record) in records.iter().enumerate() {
            for &seconds in &config.horizons {
                let (cell, info) = run_condition(config, algorithm, i, record, seconds, out)?;
                cells.push(cell);
                conditions.push(info);
            }
        }
    }
    write_cells(out.join("cells.csv"), &cells)?;

    let report = aggregate(&cells, &manifest.exclusions)?;
    write_report(out, &report)?;

    let run_manifest = RunManifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        seed_scheme: "splitmix64 chain over (master_seed, phase, sequence, horizon_steps, tuple, run)",
        config: config.clone(),
        manifest,
        sequences,
        conditions,
    };
    std::fs::write(
        out.join("run_manifest.toml"),
        toml::to_string(&run_manifest).map_err(|e| crate::Error::Config(e.to_string()))?,
    )?;
    Ok(ExperimentOutcome { cells, report })
}

fn run_condition(
    config: &ExperimentConfig,
    algorithm: Algorithm,
    sequence: usize,
    record: &MarkerRecord,
    seconds: f64,
    out: &Path,
) -> Result<(Cell, ConditionInfo)> {
    let h = horizon_steps(record, seconds)?;
    let stem = file_stem(algorithm, &record.label, seconds);
    log::info!("{algorithm}: {} at h={seconds} s ({h} steps)", record.label);

    let cv = grid_search_horizon(algorithm, record, sequence, h, config)?;
    write_cv_surface(out.join("cv").join(format!("{stem}.csv")), &cv)?;
    let chosen = cv.chosen_hyper();
    log::info!("{algorithm}: {} h={seconds} s chose {chosen}", record.label);

    let eval = evaluate(algorithm, record, sequence, chosen, h, config)?;
    write_eval_runs(out.join("runs").join(format!("{stem}.csv")), &eval)?;
    if let Some(trace) = &eval.mean_loss_trace {
        write_loss_trace(out.join("loss").join(format!("{stem}.csv")), trace)?;
    }
    let cell = Cell {
        algorithm,
        sequence: record.label.clone(),
        breathing_class: record.breathing_class,
        horizon_seconds: seconds,
        n_diverged: eval.n_diverged,
        metrics: eval.summary.clone(),
    };
    let info = ConditionInfo {
        algorithm,
        sequence: record.label.clone(),
        horizon_seconds: seconds,
        horizon_steps: h,
        chosen,
        cv_rmse: cv.chosen_entry().mean_rmse,
        test_runs: eval.runs.len(),
        test_diverged: eval.n_diverged,
    };
    Ok((cell, info))
}

/// Writes `summary_<algo>.csv` and `curves_<algo>.csv` for each algorithm.
pub fn write_report(out: &Path, report: &Report) -> Result<()> {
    let mut algorithms: Vec<Algorithm> = report.summary.iter().map(|r| r.algorithm).collect();
    algorithms.dedup();
    for a in algorithms {
        let rows: Vec<_> = report.summary.iter().filter(|r| r.algorithm == a).cloned().collect();
        write_summary(out.join(format!("summary_{a}.csv")), &rows)?;
        let curves: Vec<_> = report.curves.iter().filter(|r| r.algorithm == a).cloned().collect();
        write_curves(out.join(format!("curves_{a}.csv")), &curves)?;
    }
    Ok(())
}
