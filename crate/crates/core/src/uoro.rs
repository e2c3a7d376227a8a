//! Unbiased online recurrent optimization for the vanilla tanh RNN.
//!
//! The influence matrix `dx_n/dtheta` is replaced by a rank-one pair
//! `x_tilde * theta_tilde^T` whose expectation over the random sign vectors
//! equals the exact matrix. Each step runs, in this order:
//!
//! 1. forward pass, error `e = y* - y`;
//! 2. `delta_theta` (direct dependence of the loss on `W_c`);
//! 3. gradient estimate `(grad_x L . x_tilde) theta_tilde + delta_theta`,
//!    using the memory from the *previous* step;
//! 4. a fresh sign vector `nu`, tangent propagation of `x_tilde`, and
//!    `delta_theta_g = nu^T dF_st/dtheta`;
//! 5. rescaling factors `rho_0`, `rho_1` and the memory update;
//! 6. clipping of the gradient estimate and the SGD update.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_finite, check_len, Error, Result};
use crate::rnn::{self, RnnDims, RnnHyper, RnnParams, StepCache};

pub const EPS_NORM: f64 = 1e-7;
pub const EPS_PROP: f64 = 1e-7;

/// Rank-one estimator of the influence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UoroMemory {
    pub x_tilde: DVector<f64>,
    pub theta_tilde: DVector<f64>,
}

impl UoroMemory {
    pub fn zeros(dims: RnnDims) -> Self {
        Self {
            x_tilde: DVector::zeros(dims.hidden),
            theta_tilde: DVector::zeros(dims.n_params()),
        }
    }

    /// Dense `x_tilde * theta_tilde^T`, for inspection and tests.
    pub fn outer(&self) -> DMatrix<f64> {
        &self.x_tilde * self.theta_tilde.transpose()
    }

    /// Advances the estimator one step for a given sign vector `nu`.
    ///
    /// `x`, `u` are the step's incoming state and input and `cache` its
    /// forward pass under `params`.
    pub fn propagate(
        &self,
        params: &RnnParams,
        x: &DVector<f64>,
        u: &DVector<f64>,
        cache: &StepCache,
        nu: &DVector<f64>,
    ) -> Result<Self> {
        let dims = params.dims();
        check_len("x_tilde", dims.hidden, self.x_tilde.len())?;
        check_len("theta_tilde", dims.n_params(), self.theta_tilde.len())?;

        let x_prop = tangent_propagate(params, x, &self.x_tilde, u, &cache.x_next, EPS_PROP)?;
        let g = delta_theta_g(nu, &cache.z, x, u, dims)?;

        let rho_0 = (self.theta_tilde.norm() / (x_prop.norm() + EPS_NORM)).sqrt() + EPS_NORM;
        let rho_1 = (g.norm() / (nu.norm() + EPS_NORM)).sqrt() + EPS_NORM;

        let x_tilde = x_prop * rho_0 + nu * rho_1;
        let mut theta_tilde = &self.theta_tilde / rho_0;
        theta_tilde.axpy(1.0 / rho_1, &g, 1.0);
        Ok(Self {
            x_tilde,
            theta_tilde,
        })
    }
}

/// Hyperparameters of a UORO-trained network.
pub type UoroHyper = RnnHyper;

/// `dL/dx_next = -e^T W_c`, returned as a column vector of length q.
pub fn grad_x_loss(e: &DVector<f64>, w_c: &DMatrixView<'_, f64>) -> Result<DVector<f64>> {
    check_len("error vector", w_c.nrows(), e.len())?;
    Ok(-(w_c.tr_mul(e)))
}

/// Loss gradient through the readout only: zero on `W_a`, `W_b`, and the
/// column-major flattening of `-e x_next^T` on `W_c`.
pub fn delta_theta(e: &DVector<f64>, x_next: &DVector<f64>, dims: RnnDims) -> Result<DVector<f64>> {
    check_len("error vector", dims.output, e.len())?;
    check_len("state", dims.hidden, x_next.len())?;
    let mut out = DVector::zeros(dims.n_params());
    let block = &mut out.as_mut_slice()[dims.w_c_range()];
    for (j, &xj) in x_next.iter().enumerate() {
        for (i, &ei) in e.iter().enumerate() {
            block[i + j * dims.output] = -ei * xj;
        }
    }
    Ok(out)
}

/// `nu^T dF_st/dtheta`: with `a = nu * tanh'(z)`, the `W_a` block is
/// `a x^T`, the `W_b` block `a u^T` (both column-major) and `W_c` is zero.
pub fn delta_theta_g(
    nu: &DVector<f64>,
    z: &DVector<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dims: RnnDims,
) -> Result<DVector<f64>> {
    let q = dims.hidden;
    check_len("sign vector", q, nu.len())?;
    check_len("pre-activation", q, z.len())?;
    check_len("state", q, x.len())?;
    check_len("input", dims.input_with_bias(), u.len())?;
    let a = nu.component_mul(&rnn::tanh_prime(z));
    let mut out = DVector::zeros(dims.n_params());
    let flat = out.as_mut_slice();
    outer_into(&a, x, &mut flat[dims.w_a_range()]);
    outer_into(&a, u, &mut flat[dims.w_b_range()]);
    Ok(out)
}

/// Column-major `a b^T` written into `dst`.
fn outer_into(a: &DVector<f64>, b: &DVector<f64>, dst: &mut [f64]) {
    let rows = a.len();
    for (j, &bj) in b.iter().enumerate() {
        let col = &mut dst[j * rows..(j + 1) * rows];
        for (d, &ai) in col.iter_mut().zip(a.iter()) {
            *d = ai * bj;
        }
    }
}

/// Finite-difference directional derivative of the state update along
/// `x_tilde`: `(tanh(W_a (x + eps x_tilde) + W_b u) - x_next) / eps`.
pub fn tangent_propagate(
    params: &RnnParams,
    x: &DVector<f64>,
    x_tilde: &DVector<f64>,
    u: &DVector<f64>,
    x_next: &DVector<f64>,
    eps_prop: f64,
) -> Result<DVector<f64>> {
    if !(eps_prop > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_prop {eps_prop}")));
    }
    check_len("x_tilde", x.len(), x_tilde.len())?;
    check_len("x_next", x.len(), x_next.len())?;
    let shifted = x + x_tilde * eps_prop;
    let perturbed = rnn::forward_state(params, &shifted, u)?;
    Ok((perturbed - x_next) / eps_prop)
}

/// Gradient estimate `(grad_x . x_tilde) theta_tilde + delta_theta`.
pub fn gradient_estimate(
    grad_x: &DVector<f64>,
    memory: &UoroMemory,
    delta_theta: &DVector<f64>,
) -> DVector<f64> {
    let s = grad_x.dot(&memory.x_tilde);
    let mut out = delta_theta.clone();
    out.axpy(s, &memory.theta_tilde, 1.0);
    out
}

/// Vector of independent uniform signs.
pub fn draw_signs<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub prediction: DVector<f64>,
    pub loss: f64,
}

/// One learning-and-prediction step. On error nothing is modified.
pub fn uoro_step<R: Rng + ?Sized>(
    params: &mut RnnParams,
    x: &mut DVector<f64>,
    memory: &mut UoroMemory,
    u: &DVector<f64>,
    y_star: &DVector<f64>,
    hyper: &UoroHyper,
    rng: &mut R,
) -> Result<StepOutput> {
    let dims = params.dims();
    let cache = rnn::forward(params, x, u)?;
    let (e, loss) = rnn::loss(&cache.y, y_star)?;
    check_finite("prediction", cache.y.as_slice())?;
    check_finite("loss", &[loss])?;

    let d_theta = delta_theta(&e, &cache.x_next, dims)?;
    let grad_x = grad_x_loss(&e, &params.w_c())?;
    let mut estimate = gradient_estimate(&grad_x, memory, &d_theta);
    check_finite("gradient estimate", estimate.as_slice())?;

    let nu = draw_signs(dims.hidden, rng);
    let next_memory = memory.propagate(params, x, u, &cache, &nu)?;
    check_finite("x_tilde", next_memory.x_tilde.as_slice())?;
    check_finite("theta_tilde", next_memory.theta_tilde.as_slice())?;

    rnn::clip_gradient_in_place(estimate.as_mut_slice(), hyper.tau);
    params.flat_mut().axpy(-hyper.eta, &estimate, 1.0);

    *memory = next_memory;
    *x = cache.x_next;
    Ok(StepOutput {
        prediction: cache.y,
        loss,
    })
}

/// An RNN trained online with UORO, owning its weights, state, memory and
/// random stream.
#[derive(Debug, Clone)]
pub struct UoroTrainer {
    params: RnnParams,
    state: DVector<f64>,
    memory: UoroMemory,
    hyper: UoroHyper,
    rng: ChaCha8Rng,
}

impl UoroTrainer {
    /// `output` is p (3 per marker); the input size follows from `hyper.shl`.
    pub fn new(n_markers: usize, hyper: UoroHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let dims = RnnDims::for_markers(hyper.hidden, n_markers, hyper.shl)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = rnn::init_params_with(dims, hyper.sigma_init, &mut rng)?;
        Ok(Self::from_params(params, hyper, rng))
    }

    pub fn from_params(params: RnnParams, hyper: UoroHyper, rng: ChaCha8Rng) -> Self {
        let dims = params.dims();
        Self {
            state: DVector::zeros(dims.hidden),
            memory: UoroMemory::zeros(dims),
            params,
            hyper,
            rng,
        }
    }

    pub fn step(&mut self, u: &DVector<f64>, y_star: &DVector<f64>) -> Result<StepOutput> {
        uoro_step(
            &mut self.params,
            &mut self.state,
            &mut self.memory,
            u,
            y_star,
            &self.hyper,
            &mut self.rng,
        )
    }

    pub fn params(&self) -> &RnnParams {
        &self.params
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn memory(&self) -> &UoroMemory {
        &self.memory
    }
}
