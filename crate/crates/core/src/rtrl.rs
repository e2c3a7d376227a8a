//! Real-time recurrent learning with a dense influence matrix.
//!
//! `J_{n+1} = diag(tanh'(z_n)) W_a J_n + dF_st/dtheta` and the loss gradient
//! at the new state is `-e^T W_c J_{n+1} + delta_theta`. Parameters move every
//! step while the recursion treats them as slowly varying.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_finite, check_len, Result};
use crate::rnn::{self, RnnDims, RnnHyper, RnnParams};
use crate::uoro::{self, StepOutput};

/// Exact sensitivity `dx_n/dtheta`, q x |W|, columns in flat parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    matrix: DMatrix<f64>,
    scratch: DMatrix<f64>,
}

impl InfluenceMatrix {
    pub fn zeros(dims: RnnDims) -> Self {
        Self {
            matrix: DMatrix::zeros(dims.hidden, dims.n_params()),
            scratch: DMatrix::zeros(dims.hidden, dims.n_params()),
        }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let scratch = DMatrix::zeros(matrix.nrows(), matrix.ncols());
        Self { matrix, scratch }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Computes the next influence matrix into the scratch buffer.
    fn advance_into_scratch(&mut self, params: &RnnParams, x: &DVector<f64>, u: &DVector<f64>, d: &DVector<f64>) {
        let dims = params.dims();
        let q = dims.hidden;
        self.scratch.gemm(1.0, &params.w_a(), &self.matrix, 0.0);
        for mut col in self.scratch.column_iter_mut() {
            col.component_mul_assign(d);
        }
        let b_start = dims.w_b_range().start;
        for i in 0..q {
            for (j, &xj) in x.iter().enumerate() {
                self.scratch[(i, i + j * q)] += d[i] * xj;
            }
            for (j, &uj) in u.iter().enumerate() {
                self.scratch[(i, b_start + i + j * q)] += d[i] * uj;
            }
        }
    }

    fn commit(&mut self) {
        std::mem::swap(&mut self.matrix, &mut self.scratch);
    }
}

/// `dF_st/dx = diag(tanh'(z)) W_a`.
pub fn jac_state_x(params: &RnnParams, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("pre-activation", params.dims().hidden, z.len())?;
    let d = rnn::tanh_prime(z);
    let mut out = params.w_a().into_owned();
    for mut col in out.column_iter_mut() {
        col.component_mul_assign(&d);
    }
    Ok(out)
}

/// Dense `dF_st/dtheta` (q x |W|). Row `i` holds `tanh'(z_i) x_j` at the
/// `W_a[i, j]` column and `tanh'(z_i) u_j` at the `W_b[i, j]` column.
pub fn jac_state_theta(
    x: &DVector<f64>,
    u: &DVector<f64>,
    z: &DVector<f64>,
    dims: RnnDims,
) -> Result<DMatrix<f64>> {
    let q = dims.hidden;
    check_len("state", q, x.len())?;
    check_len("pre-activation", q, z.len())?;
    check_len("input", dims.input_with_bias(), u.len())?;
    let d = rnn::tanh_prime(z);
    let mut out = DMatrix::zeros(q, dims.n_params());
    let b_start = dims.w_b_range().start;
    for i in 0..q {
        for (j, &xj) in x.iter().enumerate() {
            out[(i, i + j * q)] = d[i] * xj;
        }
        for (j, &uj) in u.iter().enumerate() {
            out[(i, b_start + i + j * q)] = d[i] * uj;
        }
    }
    Ok(out)
}

/// Exact loss gradient for the step whose forward pass reached `x_next`,
/// given the already advanced influence matrix `j_next`.
fn exact_gradient(
    params: &RnnParams,
    e: &DVector<f64>,
    x_next: &DVector<f64>,
    j_next: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let grad_x = uoro::grad_x_loss(e, &params.w_c())?;
    let mut grad = uoro::delta_theta(e, x_next, params.dims())?;
    grad.gemv_tr(1.0, j_next, &grad_x, 1.0);
    Ok(grad)
}

/// Outcome of one RTRL step; `gradient` is the unclipped exact gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct RtrlStepOutput {
    pub prediction: DVector<f64>,
    pub loss: f64,
    pub gradient: DVector<f64>,
}

/// One learning-and-prediction step. On error nothing is modified.
pub fn rtrl_step(
    params: &mut RnnParams,
    x: &mut DVector<f64>,
    influence: &mut InfluenceMatrix,
    u: &DVector<f64>,
    y_star: &DVector<f64>,
    eta: f64,
    tau: f64,
) -> Result<RtrlStepOutput> {
    let dims = params.dims();
    check_len("influence rows", dims.hidden, influence.matrix.nrows())?;
    check_len("influence columns", dims.n_params(), influence.matrix.ncols())?;
    let cache = rnn::forward(params, x, u)?;
    let (e, loss) = rnn::loss(&cache.y, y_star)?;
    check_finite("prediction", cache.y.as_slice())?;
    check_finite("loss", &[loss])?;

    let d = rnn::tanh_prime(&cache.z);
    influence.advance_into_scratch(params, x, u, &d);
    let gradient = exact_gradient(params, &e, &cache.x_next, &influence.scratch)?;
    check_finite("gradient", gradient.as_slice())?;
    check_finite("influence matrix", influence.scratch.as_slice())?;

    let mut update = gradient.clone();
    rnn::clip_gradient_in_place(update.as_mut_slice(), tau);
    params.flat_mut().axpy(-eta, &update, 1.0);
    influence.commit();
    *x = cache.x_next;
    Ok(RtrlStepOutput {
        prediction: cache.y,
        loss,
        gradient,
    })
}

/// An RNN trained online with RTRL.
#[derive(Debug, Clone)]
pub struct RtrlTrainer {
    params: RnnParams,
    state: DVector<f64>,
    influence: InfluenceMatrix,
    hyper: RnnHyper,
}

impl RtrlTrainer {
    pub fn new(n_markers: usize, hyper: RnnHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let dims = RnnDims::for_markers(hyper.hidden, n_markers, hyper.shl)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = rnn::init_params_with(dims, hyper.sigma_init, &mut rng)?;
        Ok(Self::from_params(params, hyper))
    }

    pub fn from_params(params: RnnParams, hyper: RnnHyper) -> Self {
        let dims = params.dims();
        Self {
            state: DVector::zeros(dims.hidden),
            influence: InfluenceMatrix::zeros(dims),
            params,
            hyper,
        }
    }

    pub fn step(&mut self, u: &DVector<f64>, y_star: &DVector<f64>) -> Result<StepOutput> {
        let out = rtrl_step(
            &mut self.params,
            &mut self.state,
            &mut self.influence,
            u,
            y_star,
            self.hyper.eta,
            self.hyper.tau,
        )?;
        Ok(StepOutput {
            prediction: out.prediction,
            loss: out.loss,
        })
    }

    pub fn params(&self) -> &RnnParams {
        &self.params
    }

    pub fn influence(&self) -> &InfluenceMatrix {
        &self.influence
    }
}
