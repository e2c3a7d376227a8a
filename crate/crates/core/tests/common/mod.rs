//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop, clippy::type_complexity)]

use marker_forecast::rnn::{self, RnnDims, RnnParams};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn random_input(dims: RnnDims, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let mut u = random_vec(dims.input_with_bias(), rng, 1.0);
    u[0] = 1.0;
    u
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Central-difference gradient of a scalar function of the flat parameters.
pub fn fd_gradient(params: &RnnParams, h: f64, f: impl Fn(&RnnParams) -> f64) -> DVector<f64> {
    let mut p = params.clone();
    DVector::from_fn(params.flat().len(), |i, _| {
        let orig = p.flat()[i];
        p.flat_mut()[i] = orig + h;
        let plus = f(&p);
        p.flat_mut()[i] = orig - h;
        let minus = f(&p);
        p.flat_mut()[i] = orig;
        (plus - minus) / (2.0 * h)
    })
}

/// Loss of step `n` (0-based) after running the frozen network from x = 0.
pub fn unrolled_loss(params: &RnnParams, inputs: &[DVector<f64>], targets: &[DVector<f64>], n: usize) -> f64 {
    let mut x = DVector::zeros(params.dims().hidden);
    for k in 0..n {
        x = rnn::forward_state(params, &x, &inputs[k]).unwrap();
    }
    let c = rnn::forward(params, &x, &inputs[n]).unwrap();
    0.5 * (&targets[n] - &c.y).norm_squared()
}

/// Naive metric loops over `[step][marker][coord]` traces.
pub struct NaiveMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub nrmse: f64,
    pub max_error: f64,
    pub jitter: f64,
}

pub fn naive_metrics(pred: &[Vec<[f64; 3]>], truth: &[Vec<[f64; 3]>]) -> NaiveMetrics {
    let t = pred.len();
    let nm = pred[0].len();
    let norm = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut max: f64 = 0.0;
    for k in 0..t {
        for j in 0..nm {
            let d = norm(pred[k][j], truth[k][j]);
            sum += d;
            sum_sq += d * d;
            max = max.max(d);
        }
    }
    let mut spread = 0.0;
    for j in 0..nm {
        let mut mu = [0.0; 3];
        for k in 0..t {
            for c in 0..3 {
                mu[c] += truth[k][j][c] / t as f64;
            }
        }
        for k in 0..t {
            spread += norm(truth[k][j], mu).powi(2);
        }
    }
    let mut jit = 0.0;
    for k in 0..t - 1 {
        for j in 0..nm {
            jit += norm(pred[k + 1][j], pred[k][j]);
        }
    }
    NaiveMetrics {
        mae: sum / (nm * t) as f64,
        rmse: (sum_sq / (nm * t) as f64).sqrt(),
        nrmse: sum_sq.sqrt() / spread.sqrt(),
        max_error: max,
        jitter: jit / (nm * (t - 1)) as f64,
    }
}

pub fn random_trace(rng: &mut ChaCha8Rng, t: usize, nm: usize) -> (Vec<Vec<[f64; 3]>>, Vec<Vec<[f64; 3]>>) {
    let mut point = |s: f64| [rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s)];
    let truth: Vec<Vec<[f64; 3]>> = (0..t).map(|_| (0..nm).map(|_| point(20.0)).collect()).collect();
    let pred = truth
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| {
                    let n = point(3.0);
                    [p[0] + n[0], p[1] + n[1], p[2] + n[2]]
                })
                .collect()
        })
        .collect();
    (pred, truth)
}

pub fn flatten(v: &[Vec<[f64; 3]>]) -> Vec<f64> {
    v.iter().flatten().flatten().copied().collect()
}
