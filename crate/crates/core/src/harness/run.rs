use std::ops::Range;

use nalgebra::DVector;

use super::{Algorithm, Hyper};
use crate::baselines::{fit_linreg, predict_linreg, LmsFilter};
use crate::error::{Error, Result};
use crate::metrics::PredictionTrace;
use crate::rtrl::RtrlTrainer;
use crate::signal::{fit_normalizer, MarkerRecord, NormalizedSeries, Partition};
use crate::uoro::UoroTrainer;

/// Which partition range is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scoring {
    CrossValidation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    /// Horizon in steps.
    pub horizon: usize,
    pub seed: u64,
    pub scoring: Scoring,
    pub tau: f64,
}

/// Denormalized predictions over the scored range and the per-step loss
/// (normalized units) of every step processed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: PredictionTrace,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed(RunOutput),
    /// A non-finite quantity appeared while processing window `step`.
    Diverged { step: usize, quantity: &'static str },
}

impl RunOutcome {
    pub fn completed(self) -> Option<RunOutput> {
        match self {
            RunOutcome::Completed(out) => Some(out),
            RunOutcome::Diverged { .. } => None,
        }
    }
}

enum Online {
    Uoro(Box<UoroTrainer>),
    Rtrl(Box<RtrlTrainer>),
    Lms(LmsFilter),
}

impl Online {
    fn step(&mut self, u: &DVector<f64>, y_star: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        match self {
            Online::Uoro(t) => t.step(u, y_star).map(|o| (o.prediction, o.loss)),
            Online::Rtrl(t) => t.step(u, y_star).map(|o| (o.prediction, o.loss)),
            Online::Lms(f) => f.step(u, y_star),
        }
    }
}

struct Scored {
    range: Range<usize>,
    predicted: Vec<f64>,
    truth: Vec<f64>,
}

impl Scored {
    fn push(&mut self, k: usize, record: &MarkerRecord, prediction: Vec<f64>) {
        if self.range.contains(&k) {
            self.predicted.extend(prediction);
            self.truth.extend_from_slice(record.step(k));
        }
    }
}

/// Runs one method over a single sequence from t = 0, learning at every
/// step, and scores the predictions whose targets fall in the requested
/// range. The normalizer is fitted on the partition's training range.
pub fn run_sequence_online(record: &MarkerRecord, partition: &Partition, spec: &RunSpec) -> Result<RunOutcome> {
    let (shl, h) = (spec.hyper.shl, spec.horizon);
    if shl == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "history length {shl} and horizon {h} must be positive"
        )));
    }
    if partition.test.end != record.len() || partition.train.start != 0 {
        return Err(Error::OutOfRange("partition does not cover the record".into()));
    }
    let range = match spec.scoring {
        Scoring::CrossValidation => partition.cross_validation.clone(),
        Scoring::Test => partition.test.clone(),
    };
    let lag = shl + h - 1;
    if range.start < lag {
        return Err(Error::OutOfRange(format!(
            "scoring starts at step {} but the first forecast targets step {lag}",
            range.start
        )));
    }
    let normalizer = fit_normalizer(record, partition.train.clone())?;
    let series = NormalizedSeries::new(record, &normalizer)?;
    let width = record.n_coords();
    let mut scored = Scored {
        range: range.clone(),
        predicted: Vec::with_capacity(range.len() * width),
        truth: Vec::with_capacity(range.len() * width),
    };
    let mut losses = Vec::new();
    let mut u = DVector::zeros(width * shl + 1);

    match spec.algorithm {
        Algorithm::None => {
            for k in range.clone() {
                let held = record.step(k - h);
                let e2: f64 = normalizer
                    .normalize(held)
                    .iter()
                    .zip(series.step(k))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                losses.push(0.5 * e2);
                scored.push(k, record, held.to_vec());
            }
        }
        Algorithm::Linreg => {
            let train_windows = partition.train.end.saturating_sub(lag);
            let samples = (0..train_windows)
                .map(|n| series.sample(shl, h, n))
                .collect::<Result<Vec<_>>>()?;
            let model = fit_linreg(&samples)?;
            for k in range.clone() {
                series.fill_input(shl, k - lag, u.as_mut_slice());
                let y = predict_linreg(&model, &u)?;
                losses.push(0.5 * y.iter().zip(series.step(k)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
                if y.iter().any(|v| !v.is_finite()) {
                    return Ok(RunOutcome::Diverged {
                        step: k - lag,
                        quantity: "prediction",
                    });
                }
                scored.push(k, record, normalizer.denormalize(y.as_slice()));
            }
        }
        Algorithm::Uoro | Algorithm::Rtrl | Algorithm::Lms => {
            let mut model = match spec.algorithm {
                Algorithm::Uoro => Online::Uoro(Box::new(UoroTrainer::new(record.n_markers(), spec.hyper.rnn(spec.tau)?, spec.seed)?)),
                Algorithm::Rtrl => Online::Rtrl(Box::new(RtrlTrainer::new(record.n_markers(), spec.hyper.rnn(spec.tau)?, spec.seed)?)),
                _ => {
                    let eta = spec
                        .hyper
                        .eta
                        .ok_or_else(|| Error::InvalidParameter("LMS tuple lacks a learning rate".into()))?;
                    Online::Lms(LmsFilter::new(width, width * shl + 1, eta, spec.tau)?)
                }
            };
            for n in 0..range.end - lag {
                let k = n + lag;
                series.fill_input(shl, n, u.as_mut_slice());
                let y_star = DVector::from_column_slice(series.step(k));
                let (y, loss) = match model.step(&u, &y_star) {
                    Ok(out) => out,
                    Err(Error::NonFinite { quantity }) => return Ok(RunOutcome::Diverged { step: n, quantity }),
                    Err(e) => return Err(e),
                };
                losses.push(loss);
                scored.push(k, record, normalizer.denormalize(y.as_slice()));
            }
        }
    }

    let trace = PredictionTrace::new(record.n_markers(), range.start, scored.predicted, scored.truth)?;
    Ok(RunOutcome::Completed(RunOutput { trace, losses }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_partition, PartitionScheme};

    fn wave(seconds: f64) -> MarkerRecord {
        let n = (seconds * 10.0) as usize;
        let pos = (0..n)
            .flat_map(|k| {
                let t = k as f64 * 0.1;
                (0..9).map(move |c| 10.0 * (2.0 * std::f64::consts::PI * t / 4.0 + c as f64).sin() + c as f64)
            })
            .collect();
        MarkerRecord::new(0.1, 3, pos).unwrap()
    }

    fn spec(algorithm: Algorithm, hyper: Hyper, scoring: Scoring) -> RunSpec {
        RunSpec {
            algorithm,
            hyper,
            horizon: 3,
            seed: 11,
            scoring,
            tau: 2.0,
        }
    }

    fn rnn_hyper() -> Hyper {
        Hyper {
            hidden: Some(5),
            shl: 4,
            eta: Some(0.1),
            sigma_init: Some(0.05),
        }
    }

    #[test]
    fn none_equals_held_last_position() {
        let rec = wave(70.0);
        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        let hyper = Hyper {
            hidden: None,
            shl: 1,
            eta: None,
            sigma_init: None,
        };
        let out = run_sequence_online(&rec, &part, &spec(Algorithm::None, hyper, Scoring::Test))
            .unwrap()
            .completed()
            .unwrap();
        assert_eq!(out.trace.k_min(), 600);
        assert_eq!(out.trace.len(), 100);
        for (row, k) in (600..700).enumerate() {
            assert_eq!(&out.trace.predicted()[row * 9..(row + 1) * 9], rec.step(k - 3));
            assert_eq!(&out.trace.truth()[row * 9..(row + 1) * 9], rec.step(k));
        }
    }

    #[test]
    fn scoring_ranges_follow_the_partition() {
        let rec = wave(70.0);
        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        let cv = run_sequence_online(&rec, &part, &spec(Algorithm::Uoro, rnn_hyper(), Scoring::CrossValidation))
            .unwrap()
            .completed()
            .unwrap();
        assert_eq!((cv.trace.k_min(), cv.trace.len()), (300, 300));
        assert_eq!(cv.losses.len(), 600 - 6);
        let test = run_sequence_online(&rec, &part, &spec(Algorithm::Uoro, rnn_hyper(), Scoring::Test))
            .unwrap()
            .completed()
            .unwrap();
        assert_eq!((test.trace.k_min(), test.trace.len()), (600, 100));
        assert_eq!(&test.losses[..cv.losses.len()], &cv.losses[..]);
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let rec = wave(65.0);
        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        for algorithm in [Algorithm::Uoro, Algorithm::Rtrl] {
            let s = spec(algorithm, rnn_hyper(), Scoring::Test);
            let a = run_sequence_online(&rec, &part, &s).unwrap();
            let b = run_sequence_online(&rec, &part, &s).unwrap();
            assert_eq!(a, b);
            let other = run_sequence_online(&rec, &part, &RunSpec { seed: 12, ..s }).unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn linreg_and_lms_track_a_sinusoid() {
        let rec = wave(70.0);
        let lin_part = make_partition(&rec, PartitionScheme::Offline54_6).unwrap();
        let lin = Hyper {
            hidden: None,
            shl: 10,
            eta: None,
            sigma_init: None,
        };
        let out = run_sequence_online(&rec, &lin_part, &spec(Algorithm::Linreg, lin, Scoring::Test))
            .unwrap()
            .completed()
            .unwrap();
        assert!(crate::metrics::rmse(&out.trace).unwrap() < 1e-6);

        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        let lms = Hyper { eta: Some(0.05), ..lin };
        let out = run_sequence_online(&rec, &part, &spec(Algorithm::Lms, lms, Scoring::Test))
            .unwrap()
            .completed()
            .unwrap();
        assert!(crate::metrics::rmse(&out.trace).unwrap() < 3.0);
    }

    #[test]
    fn divergence_is_flagged_not_raised() {
        let mut pos = wave(70.0).positions().to_vec();
        pos[650 * 9] = 1e308;
        pos[651 * 9] = -1e308;
        let rec = MarkerRecord::new(0.1, 3, pos).unwrap();
        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        let hyper = Hyper {
            hidden: None,
            shl: 2,
            eta: Some(0.1),
            sigma_init: None,
        };
        let out = run_sequence_online(&rec, &part, &spec(Algorithm::Lms, hyper, Scoring::Test)).unwrap();
        assert!(matches!(out, RunOutcome::Diverged { .. }), "{out:?}");
    }

    #[test]
    fn rejects_windows_reaching_before_the_record() {
        let rec = wave(70.0);
        let part = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        let hyper = Hyper { shl: 400, ..rnn_hyper() };
        assert!(run_sequence_online(&rec, &part, &spec(Algorithm::Uoro, hyper, Scoring::CrossValidation)).is_err());
    }
}
