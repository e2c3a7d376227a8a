use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_seed, Algorithm, ExperimentConfig, Hyper, Phase, RunOutcome, RunSpec, Scoring};
use crate::error::{Error, Result};
use crate::metrics::{ci_per_condition, Metric, MetricSet};
use crate::signal::{make_partition, MarkerRecord};

/// Mean of one metric over the completed runs of a condition; the
/// half-range is absent with fewer than two runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    pub half_range: Option<f64>,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// `None` for a diverged run.
    pub metrics: Option<MetricSet>,
    pub diverged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    pub horizon: usize,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<MetricSummary>,
    pub n_diverged: usize,
    /// Per-step loss averaged over completed runs.
    pub mean_loss_trace: Option<Vec<f64>>,
}

impl EvalResult {
    pub fn summary_of(&self, metric: Metric) -> &MetricSummary {
        self.summary
            .iter()
            .find(|s| s.metric == metric)
            .expect("every metric is summarized")
    }
}

/// Test-range evaluation of a selected tuple: `n_test` seeded runs for the
/// RNN trainers, a single run for deterministic methods.
pub fn evaluate(
    algorithm: Algorithm,
    record: &MarkerRecord,
    sequence: usize,
    hyper: Hyper,
    horizon: usize,
    config: &ExperimentConfig,
) -> Result<EvalResult> {
    let partition = make_partition(record, algorithm.partition_scheme())?;
    let tuple = config
        .grid(algorithm)
        .tuples(algorithm)?
        .iter()
        .position(|t| *t == hyper)
        .unwrap_or(usize::MAX);
    let n_runs = config.test_runs(algorithm);

    let outcomes = (0..n_runs)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(config.master_seed, Phase::Test, sequence, horizon, tuple, r);
            let spec = RunSpec {
                algorithm,
                hyper,
                horizon,
                seed,
                scoring: Scoring::Test,
                tau: config.tau,
            };
            let outcome = super::run_sequence_online(record, &partition, &spec)?;
            let scored = match outcome {
                RunOutcome::Completed(out) => Ok((MetricSet::compute(&out.trace)?, out.losses)),
                RunOutcome::Diverged { step, .. } => Err(step),
            };
            Ok((r, seed, scored))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::with_capacity(n_runs);
    let mut loss_sum: Option<Vec<f64>> = None;
    for (run, seed, scored) in outcomes {
        match scored {
            Ok((metrics, losses)) => {
                if config.loss_traces {
                    match &mut loss_sum {
                        Some(acc) => acc.iter_mut().zip(&losses).for_each(|(a, l)| *a += l),
                        None => loss_sum = Some(losses),
                    }
                }
                runs.push(RunRecord {
                    run,
                    seed,
                    metrics: Some(metrics),
                    diverged_at: None,
                });
            }
            Err(step) => runs.push(RunRecord {
                run,
                seed,
                metrics: None,
                diverged_at: Some(step),
            }),
        }
    }
    let completed: Vec<MetricSet> = runs.iter().filter_map(|r| r.metrics).collect();
    let n_diverged = n_runs - completed.len();
    if completed.is_empty() {
        return Err(Error::Diverged(format!(
            "{algorithm} on {:?}, h={horizon}, {hyper}: all {n_runs} test runs",
            record.label
        )));
    }
    if n_diverged > 0 {
        log::warn!(
            "{algorithm} on {:?}, h={horizon}: {n_diverged} of {n_runs} test runs diverged",
            record.label
        );
    }
    let summary = Metric::ALL
        .iter()
        .map(|&metric| summarize(metric, &completed))
        .collect::<Result<Vec<_>>>()?;
    let n = completed.len() as f64;
    Ok(EvalResult {
        algorithm,
        hyper,
        horizon,
        runs,
        summary,
        n_diverged,
        mean_loss_trace: loss_sum.map(|v| v.into_iter().map(|s| s / n).collect()),
    })
}

fn summarize(metric: Metric, runs: &[MetricSet]) -> Result<MetricSummary> {
    let values: Vec<f64> = runs.iter().map(|m| m.get(metric)).collect();
    if values.len() < 2 {
        return Ok(MetricSummary {
            metric,
            mean: values[0],
            half_range: None,
            n_runs: 1,
        });
    }
    let ci = ci_per_condition(&values)?;
    Ok(MetricSummary {
        metric,
        mean: ci.mean,
        half_range: Some(ci.half_range),
        n_runs: ci.n_runs,
    })
}
