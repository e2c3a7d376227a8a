use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Algorithm, Hyper};
use crate::baselines::{fit_linreg, predict_linreg, LmsFilter};
use crate::error::{Error, Result};
use crate::rtrl::RtrlTrainer;
use crate::signal::WindowedSample;
use crate::uoro::UoroTrainer;

type StepFn = Box<dyn FnMut(&DVector<f64>, &DVector<f64>) -> Result<()>>;

/// Wall-clock statistics of single learning-and-prediction steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchResult {
    pub algorithm: Algorithm,
    pub hidden: usize,
    pub shl: usize,
    pub steps: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    /// Coefficient of variation of the per-step times.
    pub cv: f64,
}

/// Times `steps` warm steps on random inputs in [-1, 1]. `hidden` is ignored
/// by the linear methods.
pub fn bench_step_time(
    algorithm: Algorithm,
    hidden: usize,
    shl: usize,
    n_markers: usize,
    steps: usize,
    seed: u64,
) -> Result<BenchResult> {
    if steps == 0 {
        return Err(Error::InvalidParameter("benchmark needs at least one step".into()));
    }
    let p = 3 * n_markers;
    let m1 = p * shl + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = (steps / 10).clamp(1, 50);
    let total = warmup + steps;
    let inputs: Vec<(DVector<f64>, DVector<f64>)> = (0..total.min(256))
        .map(|_| {
            let mut u = DVector::from_fn(m1, |_, _| rng.random_range(-1.0..1.0));
            u[0] = 1.0;
            (u, DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0)))
        })
        .collect();
    let hyper = Hyper {
        hidden: Some(hidden),
        shl,
        eta: Some(0.05),
        sigma_init: Some(0.02),
    };

    let mut step: StepFn = match algorithm {
        Algorithm::Uoro => {
            let mut t = UoroTrainer::new(n_markers, hyper.rnn(2.0)?, seed)?;
            Box::new(move |u, y| t.step(u, y).map(drop))
        }
        Algorithm::Rtrl => {
            let mut t = RtrlTrainer::new(n_markers, hyper.rnn(2.0)?, seed)?;
            Box::new(move |u, y| t.step(u, y).map(drop))
        }
        Algorithm::Lms => {
            let mut f = LmsFilter::new(p, m1, 0.05, 2.0)?;
            Box::new(move |u, y| f.step(u, y).map(drop))
        }
        Algorithm::Linreg => {
            let samples: Vec<WindowedSample> = inputs
                .iter()
                .enumerate()
                .map(|(i, (u, y))| WindowedSample {
                    input: u.clone(),
                    target: y.clone(),
                    time_index: i,
                })
                .collect();
            let model = fit_linreg(&samples)?;
            Box::new(move |u, _| predict_linreg(&model, u).map(drop))
        }
        Algorithm::None => Box::new(move |u, _| {
            std::hint::black_box(u.rows(u.len() - p, p).into_owned());
            Ok(())
        }),
    };

    let mut times = Vec::with_capacity(steps);
    for i in 0..total {
        let (u, y) = &inputs[i % inputs.len()];
        let start = Instant::now();
        step(u, y)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        if i >= warmup {
            times.push(elapsed);
        }
    }
    let mean = times.iter().sum::<f64>() / steps as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / steps as f64;
    times.sort_by(f64::total_cmp);
    let median = if steps % 2 == 1 {
        times[steps / 2]
    } else {
        0.5 * (times[steps / 2 - 1] + times[steps / 2])
    };
    Ok(BenchResult {
        algorithm,
        hidden,
        shl,
        steps,
        median_ms: median,
        mean_ms: mean,
        cv: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
    })
}
