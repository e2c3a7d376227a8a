//! Single-hidden-layer tanh RNN shared by the UORO and RTRL trainers.
//!
//! ```text
//! z      = W_a x + W_b u
//! x_next = tanh(z)
//! y      = W_c x_next
//! ```
//!
//! All weights live in one flat parameter vector `[W_a | W_b | W_c]`, each
//! block stored column-major (`A[0,0], A[1,0], ..., A[M-1,0], A[0,1], ...`).
//! This is exactly nalgebra's storage order, so the matrices are exposed as
//! zero-copy views into the flat vector.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, Error, Result};

/// Layer sizes: `hidden` = q, `input` = m (the bias adds one more column),
/// `output` = p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RnnDims {
    pub hidden: usize,
    pub input: usize,
    pub output: usize,
}

impl RnnDims {
    pub fn new(hidden: usize, input: usize, output: usize) -> Result<Self> {
        if hidden == 0 || output == 0 {
            return Err(Error::InvalidParameter(format!(
                "hidden and output sizes must be positive (q={hidden}, p={output})"
            )));
        }
        Ok(Self {
            hidden,
            input,
            output,
        })
    }

    /// Dimensions for `n_markers` 3D markers and a history of `shl` steps.
    pub fn for_markers(hidden: usize, n_markers: usize, shl: usize) -> Result<Self> {
        Self::new(hidden, 3 * n_markers * shl, 3 * n_markers)
    }

    /// Length of `u_n` including the bias entry.
    pub fn input_with_bias(&self) -> usize {
        self.input + 1
    }

    /// Total parameter count `q (p + q + m + 1)`.
    pub fn n_params(&self) -> usize {
        self.hidden * (self.output + self.hidden + self.input + 1)
    }

    pub fn w_a_range(&self) -> Range<usize> {
        0..self.hidden * self.hidden
    }

    pub fn w_b_range(&self) -> Range<usize> {
        let start = self.hidden * self.hidden;
        start..start + self.hidden * self.input_with_bias()
    }

    pub fn w_c_range(&self) -> Range<usize> {
        let start = self.w_b_range().end;
        start..start + self.output * self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    dims: RnnDims,
    theta: DVector<f64>,
}

impl RnnParams {
    pub fn zeros(dims: RnnDims) -> Self {
        Self {
            dims,
            theta: DVector::zeros(dims.n_params()),
        }
    }

    /// Wraps an already flattened `[W_a | W_b | W_c]` vector.
    pub fn from_flat(dims: RnnDims, theta: DVector<f64>) -> Result<Self> {
        check_len("flat parameter vector", dims.n_params(), theta.len())?;
        Ok(Self { dims, theta })
    }

    pub fn from_matrices(w_a: &DMatrix<f64>, w_b: &DMatrix<f64>, w_c: &DMatrix<f64>) -> Result<Self> {
        let q = w_a.nrows();
        check_len("W_a columns", q, w_a.ncols())?;
        check_len("W_b rows", q, w_b.nrows())?;
        check_len("W_c columns", q, w_c.ncols())?;
        if w_b.ncols() == 0 {
            return Err(Error::InvalidParameter("W_b needs a bias column".into()));
        }
        let dims = RnnDims::new(q, w_b.ncols() - 1, w_c.nrows())?;
        let theta = DVector::from_iterator(
            dims.n_params(),
            w_a.iter().chain(w_b.iter()).chain(w_c.iter()).copied(),
        );
        Ok(Self { dims, theta })
    }

    pub fn to_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            self.w_a().into_owned(),
            self.w_b().into_owned(),
            self.w_c().into_owned(),
        )
    }

    pub fn dims(&self) -> RnnDims {
        self.dims
    }

    pub fn flat(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn flat_mut(&mut self) -> &mut DVector<f64> {
        &mut self.theta
    }

    pub fn w_a(&self) -> DMatrixView<'_, f64> {
        let q = self.dims.hidden;
        DMatrixView::from_slice(&self.theta.as_slice()[self.dims.w_a_range()], q, q)
    }

    pub fn w_b(&self) -> DMatrixView<'_, f64> {
        let (q, cols) = (self.dims.hidden, self.dims.input_with_bias());
        DMatrixView::from_slice(&self.theta.as_slice()[self.dims.w_b_range()], q, cols)
    }

    pub fn w_c(&self) -> DMatrixView<'_, f64> {
        let (p, q) = (self.dims.output, self.dims.hidden);
        DMatrixView::from_slice(&self.theta.as_slice()[self.dims.w_c_range()], p, q)
    }

    pub fn w_a_mut(&mut self) -> DMatrixViewMut<'_, f64> {
        let q = self.dims.hidden;
        let range = self.dims.w_a_range();
        DMatrixViewMut::from_slice(&mut self.theta.as_mut_slice()[range], q, q)
    }

    pub fn w_b_mut(&mut self) -> DMatrixViewMut<'_, f64> {
        let (q, cols) = (self.dims.hidden, self.dims.input_with_bias());
        let range = self.dims.w_b_range();
        DMatrixViewMut::from_slice(&mut self.theta.as_mut_slice()[range], q, cols)
    }

    pub fn w_c_mut(&mut self) -> DMatrixViewMut<'_, f64> {
        let (p, q) = (self.dims.output, self.dims.hidden);
        let range = self.dims.w_c_range();
        DMatrixViewMut::from_slice(&mut self.theta.as_mut_slice()[range], p, q)
    }

    /// Writes a checkpoint.
    ///
    /// Layout, all little-endian: the 4 magic bytes `RNNP`, a `u32` format
    /// version (1), three `u64` sizes `q`, `m`, `p`, then the `q (p + q + m + 1)`
    /// parameters as `f64` in flat `[W_a | W_b | W_c]` column-major order.
    pub fn write_checkpoint(&self, mut out: impl Write) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for size in [self.dims.hidden, self.dims.input, self.dims.output] {
            out.write_all(&(size as u64).to_le_bytes())?;
        }
        for v in self.theta.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::InvalidParameter("not an RNN checkpoint".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != CHECKPOINT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let mut sizes = [0usize; 3];
        for s in &mut sizes {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            *s = u64::from_le_bytes(buf) as usize;
        }
        let dims = RnnDims::new(sizes[0], sizes[1], sizes[2])?;
        let mut theta = DVector::zeros(dims.n_params());
        for v in theta.iter_mut() {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(Self { dims, theta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_checkpoint(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_checkpoint(std::io::BufReader::new(file))
    }
}

/// Training hyperparameters shared by the online RNN trainers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnnHyper {
    pub eta: f64,
    pub tau: f64,
    pub sigma_init: f64,
    /// Signal history length in steps.
    pub shl: usize,
    pub hidden: usize,
}

impl RnnHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("learning rate {}", self.eta)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("clip threshold {}", self.tau)));
        }
        if !(self.sigma_init > 0.0) {
            return Err(Error::InvalidParameter(format!("init std-dev {}", self.sigma_init)));
        }
        if self.shl == 0 || self.hidden == 0 {
            return Err(Error::InvalidParameter(format!(
                "history length {} and hidden size {} must be positive",
                self.shl, self.hidden
            )));
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"RNNP";
const CHECKPOINT_VERSION: u32 = 1;

/// Draws every weight i.i.d. from `N(0, sigma_init^2)` with a seeded stream.
pub fn init_params(dims: RnnDims, sigma_init: f64, seed: u64) -> Result<RnnParams> {
    init_params_with(dims, sigma_init, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn init_params_with<R: Rng + ?Sized>(
    dims: RnnDims,
    sigma_init: f64,
    rng: &mut R,
) -> Result<RnnParams> {
    if !(sigma_init > 0.0) || !sigma_init.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "initial weight std-dev must be positive, got {sigma_init}"
        )));
    }
    let normal = Normal::new(0.0, sigma_init)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let theta = DVector::from_fn(dims.n_params(), |_, _| normal.sample(rng));
    Ok(RnnParams { dims, theta })
}

/// Intermediate values of one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    /// Pre-activation `W_a x + W_b u`.
    pub z: DVector<f64>,
    pub x_next: DVector<f64>,
    pub y: DVector<f64>,
}

pub fn forward(params: &RnnParams, x: &DVector<f64>, u: &DVector<f64>) -> Result<StepCache> {
    let dims = params.dims();
    check_len("state", dims.hidden, x.len())?;
    check_len("input", dims.input_with_bias(), u.len())?;
    let mut z = params.w_b() * u;
    z.gemv(1.0, &params.w_a(), x, 1.0);
    let x_next = z.map(f64::tanh);
    let y = params.w_c() * &x_next;
    Ok(StepCache { z, x_next, y })
}

/// State update only, `tanh(W_a x + W_b u)`.
pub fn forward_state(params: &RnnParams, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let dims = params.dims();
    check_len("state", dims.hidden, x.len())?;
    check_len("input", dims.input_with_bias(), u.len())?;
    let mut z = params.w_b() * u;
    z.gemv(1.0, &params.w_a(), x, 1.0);
    z.apply(|v| *v = v.tanh());
    Ok(z)
}

/// Returns `e = y* - y` and the instantaneous loss `0.5 |e|^2`.
pub fn loss(y: &DVector<f64>, y_star: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    check_len("target", y.len(), y_star.len())?;
    let e = y_star - y;
    let l = 0.5 * e.norm_squared();
    Ok((e, l))
}

pub fn tanh_prime(z: &DVector<f64>) -> DVector<f64> {
    z.map(|v| {
        let t = v.tanh();
        1.0 - t * t
    })
}

fn euclidean_norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rescales `g` in place to norm `tau` when it exceeds `tau`; returns whether
/// it was clipped. Vectors within the threshold are left untouched, and the
/// rescaled norm never rounds above `tau`.
pub fn clip_gradient_in_place(g: &mut [f64], tau: f64) -> bool {
    let norm = euclidean_norm(g);
    if !(norm > tau) {
        return false;
    }
    let mut factor = tau / norm;
    while g.iter().map(|v| (v * factor) * (v * factor)).sum::<f64>().sqrt() > tau {
        factor = factor.next_down();
    }
    g.iter_mut().for_each(|v| *v *= factor);
    true
}

pub fn clip_gradient(g: &DVector<f64>, tau: f64) -> DVector<f64> {
    let mut out = g.clone();
    clip_gradient_in_place(out.as_mut_slice(), tau);
    out
}
