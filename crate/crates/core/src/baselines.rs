//! Linear reference predictors: the LMS adaptive filter, offline least-squares
//! regression and the hold-last-observation baseline.
//!
//! LMS and regression consume the same bias-prefixed input `u_n` as the RNNs,
//! so their weight matrices are `p x (m + 1)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, check_len, Error, Result};
use crate::rnn::clip_gradient_in_place;
use crate::signal::{MarkerRecord, WindowedSample};

/// Plain least-mean-squares filter `y = W u` with a clipped gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsFilter {
    weights: DMatrix<f64>,
    eta: f64,
    tau: f64,
}

impl LmsFilter {
    /// Zero-initialized filter for `outputs` targets and `inputs` (bias included).
    pub fn new(outputs: usize, inputs: usize, eta: f64, tau: f64) -> Result<Self> {
        Self::with_weights(DMatrix::zeros(outputs, inputs), eta, tau)
    }

    pub fn with_weights(weights: DMatrix<f64>, eta: f64, tau: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("LMS learning rate {eta}")));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("LMS clip threshold {tau}")));
        }
        Ok(Self { weights, eta, tau })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Predicts `W u`, then descends the clipped gradient `-e u^T` of the
    /// instantaneous loss. Returns the prediction made before the update and
    /// its loss. On error the weights are unchanged.
    pub fn step(&mut self, u: &DVector<f64>, y_star: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        check_len("LMS input", self.weights.ncols(), u.len())?;
        check_len("LMS target", self.weights.nrows(), y_star.len())?;
        let y = &self.weights * u;
        let e = y_star - &y;
        let loss = 0.5 * e.norm_squared();
        check_finite("LMS loss", &[loss])?;

        let mut grad = -(&e * u.transpose());
        clip_gradient_in_place(grad.as_mut_slice(), self.tau);
        let next = &self.weights - grad * self.eta;
        check_finite("LMS weights", next.as_slice())?;
        self.weights = next;
        Ok((y, loss))
    }
}

/// Ordinary least-squares map `y = W u` fitted offline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearRegressor {
    weights: Option<DMatrix<f64>>,
    rank: usize,
    underdetermined: bool,
}

impl LinearRegressor {
    pub fn is_fitted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn weights(&self) -> Option<&DMatrix<f64>> {
        self.weights.as_ref()
    }

    /// Numerical rank of the design matrix used for the fit.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True when there were fewer samples than unknowns per output.
    pub fn underdetermined(&self) -> bool {
        self.underdetermined
    }
}

/// Least-squares fit over `samples` through an SVD of the design matrix.
///
/// Singular values below `max(N, m+1) * eps * sigma_max` are dropped, which
/// yields the minimum-norm solution for rank-deficient or under-determined
/// designs.
pub fn fit_linreg(samples: &[WindowedSample]) -> Result<LinearRegressor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Empty("no samples for linear regression".into()))?;
    let (n_in, n_out) = (first.input.len(), first.target.len());
    let n = samples.len();
    let mut design = DMatrix::zeros(n, n_in);
    let mut targets = DMatrix::zeros(n, n_out);
    for (r, s) in samples.iter().enumerate() {
        check_len("regression input", n_in, s.input.len())?;
        check_len("regression target", n_out, s.target.len())?;
        design.row_mut(r).copy_from(&s.input.transpose());
        targets.row_mut(r).copy_from(&s.target.transpose());
    }
    check_finite("design matrix", design.as_slice())?;
    check_finite("regression targets", targets.as_slice())?;

    let underdetermined = n < n_in;
    if underdetermined {
        log::warn!(
            "linear regression is under-determined ({n} samples for {n_in} unknowns per output); \
             using the minimum-norm solution"
        );
    }

    let svd = design.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = sigma_max * n.max(n_in) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let solution = svd
        .solve(&targets, cutoff)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(LinearRegressor {
        weights: Some(solution.transpose()),
        rank,
        underdetermined,
    })
}

pub fn predict_linreg(model: &LinearRegressor, u: &DVector<f64>) -> Result<DVector<f64>> {
    let w = model.weights.as_ref().ok_or(Error::NotFitted)?;
    check_len("regression input", w.ncols(), u.len())?;
    Ok(w * u)
}

/// Hold-last-observation estimate: the coordinates at step `n + shl - 1`,
/// offered as the prediction for step `n + shl + horizon - 1`.
pub fn no_prediction(record: &MarkerRecord, shl: usize, horizon: usize, n: usize) -> Result<Vec<f64>> {
    if shl == 0 {
        return Err(Error::InvalidParameter("history length must be at least one step".into()));
    }
    let target = n + shl + horizon - 1;
    if target >= record.len() {
        return Err(Error::OutOfRange(format!(
            "target step {target} beyond record of {} steps",
            record.len()
        )));
    }
    Ok(record.step(n + shl - 1).to_vec())
}
