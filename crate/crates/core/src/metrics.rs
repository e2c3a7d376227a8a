//! Forecast accuracy measures on denormalized positions (mm) and the Gaussian
//! confidence-interval statistics used to summarize repeated runs.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

/// z-value of the two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Predicted and true marker positions over steps `k_min..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    n_markers: usize,
    k_min: usize,
    predicted: Vec<f64>,
    truth: Vec<f64>,
}

impl PredictionTrace {
    /// Both buffers are row-major, one step of `3 * n_markers` coordinates
    /// per row, starting at absolute step `k_min`.
    pub fn new(n_markers: usize, k_min: usize, predicted: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        let width = 3 * n_markers;
        if width == 0 {
            return Err(Error::InvalidParameter("trace needs at least one marker".into()));
        }
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                what: "predicted vs true trace",
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        if !predicted.len().is_multiple_of(width) {
            return Err(Error::InvalidParameter(format!(
                "trace length {} is not a multiple of {width}",
                predicted.len()
            )));
        }
        check_finite("predicted trace", &predicted)?;
        check_finite("true trace", &truth)?;
        Ok(Self {
            n_markers,
            k_min,
            predicted,
            truth,
        })
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    /// Number of steps `k_max - k_min + 1` (zero for an empty trace).
    pub fn len(&self) -> usize {
        self.predicted.len() / (3 * self.n_markers)
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn k_max(&self) -> Option<usize> {
        (!self.is_empty()).then(|| self.k_min + self.len() - 1)
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    fn offset(&self, row: usize, j: usize) -> usize {
        row * 3 * self.n_markers + 3 * j
    }

    fn pred_at(&self, row: usize, j: usize) -> &[f64] {
        let o = self.offset(row, j);
        &self.predicted[o..o + 3]
    }

    fn true_at(&self, row: usize, j: usize) -> &[f64] {
        let o = self.offset(row, j);
        &self.truth[o..o + 3]
    }

    /// `delta_j` for every (step, marker) in step-major order.
    fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).flat_map(move |row| {
            (0..self.n_markers).map(move |j| dist(self.pred_at(row, j), self.true_at(row, j)))
        })
    }

    fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Empty("prediction trace".into()))
        } else {
            Ok(())
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean distance between predicted and true position of marker `j` at
/// absolute step `k`.
pub fn instantaneous_error(trace: &PredictionTrace, k: usize, j: usize) -> Result<f64> {
    if k < trace.k_min || k >= trace.k_min + trace.len() || j >= trace.n_markers {
        return Err(Error::OutOfRange(format!(
            "step {k}, marker {j} outside trace (steps {}..{}, {} markers)",
            trace.k_min,
            trace.k_min + trace.len(),
            trace.n_markers
        )));
    }
    let row = k - trace.k_min;
    Ok(dist(trace.pred_at(row, j), trace.true_at(row, j)))
}

/// Root of the mean squared 3D error, pooled over markers and steps.
pub fn rmse(trace: &PredictionTrace) -> Result<f64> {
    trace.require_non_empty()?;
    let count = (trace.n_markers * trace.len()) as f64;
    Ok((trace.errors().map(|d| d * d).sum::<f64>() / count).sqrt())
}

/// Error energy relative to the true signal's spread about each marker's
/// mean position.
pub fn nrmse(trace: &PredictionTrace) -> Result<f64> {
    trace.require_non_empty()?;
    let steps = trace.len();
    let mut spread = 0.0;
    for j in 0..trace.n_markers {
        let mut mean = [0.0; 3];
        for row in 0..steps {
            for (m, v) in mean.iter_mut().zip(trace.true_at(row, j)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= steps as f64);
        for row in 0..steps {
            let d = dist(&mean, trace.true_at(row, j));
            spread += d * d;
        }
    }
    if !(spread > 0.0) {
        return Err(Error::Undefined(
            "nRMSE of a constant true signal (zero denominator)".into(),
        ));
    }
    let num: f64 = trace.errors().map(|d| d * d).sum();
    Ok(num.sqrt() / spread.sqrt())
}

pub fn mae(trace: &PredictionTrace) -> Result<f64> {
    trace.require_non_empty()?;
    let count = (trace.n_markers * trace.len()) as f64;
    Ok(trace.errors().sum::<f64>() / count)
}

pub fn max_error(trace: &PredictionTrace) -> Result<f64> {
    trace.require_non_empty()?;
    Ok(trace.errors().fold(0.0, f64::max))
}

/// Mean step-to-step displacement of the predicted positions.
pub fn jitter(trace: &PredictionTrace) -> Result<f64> {
    let steps = trace.len();
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "jitter needs at least two steps, trace has {steps}"
        )));
    }
    let mut total = 0.0;
    for row in 0..steps - 1 {
        for j in 0..trace.n_markers {
            total += dist(trace.pred_at(row + 1, j), trace.pred_at(row, j));
        }
    }
    Ok(total / (trace.n_markers * (steps - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    pub rmse: f64,
    pub nrmse: f64,
    pub max_error: f64,
    pub jitter: f64,
}

impl MetricSet {
    pub fn compute(trace: &PredictionTrace) -> Result<Self> {
        Ok(Self {
            mae: mae(trace)?,
            rmse: rmse(trace)?,
            nrmse: nrmse(trace)?,
            max_error: max_error(trace)?,
            jitter: jitter(trace)?,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Mae => self.mae,
            Metric::Rmse => self.rmse,
            Metric::Nrmse => self.nrmse,
            Metric::MaxError => self.max_error,
            Metric::Jitter => self.jitter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Rmse,
    Nrmse,
    MaxError,
    Jitter,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Mae,
        Metric::Rmse,
        Metric::Nrmse,
        Metric::MaxError,
        Metric::Jitter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
            Metric::Nrmse => "nrmse",
            Metric::MaxError => "max_error",
            Metric::Jitter => "jitter",
        }
    }
}

/// Mean of repeated runs with the half-range of its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiSummary {
    pub mean: f64,
    pub half_range: f64,
    pub n_runs: usize,
}

/// Sample mean, unbiased std-dev and `1.96 sigma / sqrt(n)`.
pub fn ci_per_condition(values: &[f64]) -> Result<CiSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "confidence interval needs at least two runs, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(CiSummary {
        mean,
        half_range: Z_95 * var.sqrt() / (n as f64).sqrt(),
        n_runs: n,
    })
}

/// Half-range for the mean over a sequences x horizons grid:
/// `sqrt(sum of squared cell half-ranges) / (|I| |H|)`.
pub fn ci_aggregate(half_ranges: &[Vec<f64>]) -> Result<f64> {
    let rows = half_ranges.len();
    let cols = half_ranges.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("confidence-interval grid".into()));
    }
    if let Some(bad) = half_ranges.iter().position(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            what: "confidence-interval grid row",
            expected: cols,
            found: half_ranges[bad].len(),
        });
    }
    let sum_sq: f64 = half_ranges.iter().flatten().map(|d| d * d).sum();
    Ok(sum_sq.sqrt() / (rows * cols) as f64)
}
