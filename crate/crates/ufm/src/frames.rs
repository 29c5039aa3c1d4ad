//! Orthonormal frames and simplex equiangular tight frame constructors.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, Mat};

/// Orthonormality tolerance enforced on every [`Frame`]: `‖P^T P − I‖_F ≤ 1e-12`.
pub const FRAME_TOL: f64 = 1e-12;

/// A `d×K` matrix with orthonormal columns.
#[derive(Clone, Debug)]
pub struct Frame {
    p: Mat,
}

impl Frame {
    /// Validates orthonormality of the columns and wraps the matrix.
    pub fn new(p: Mat) -> Result<Self> {
        ensure_finite("frame", &p)?;
        let (d, k) = p.dim();
        if d < k {
            return Err(Error::InvalidArgument(format!(
                "frame must be tall or square, got {d}x{k}"
            )));
        }
        let gram = p.t().dot(&p);
        let mut err2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                let diff = gram[[i, j]] - target;
                err2 += diff * diff;
            }
        }
        if err2.sqrt() > FRAME_TOL {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal: ‖P^T P − I‖_F = {:e}",
                err2.sqrt()
            )));
        }
        Ok(Frame { p })
    }

    /// The axis-aligned frame `[I_K; 0]`: column `k` is the `k`-th standard
    /// basis vector of `R^d`.
    pub fn axis_aligned(d: usize, k: usize) -> Result<Self> {
        if d < k || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "axis-aligned frame requires d ≥ K ≥ 1, got d={d}, K={k}"
            )));
        }
        let mut p = Mat::zeros((d, k));
        for j in 0..k {
            p[[j, j]] = 1.0;
        }
        Ok(Frame { p })
    }

    pub fn matrix(&self) -> &Mat {
        &self.p
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// Number of columns `K`.
    pub fn classes(&self) -> usize {
        self.p.ncols()
    }
}

/// The standard simplex ETF `M = √(K/(K−1))·(I_K − (1/K)·11^T)` (`K×K`).
/// Columns are unit vectors with pairwise inner products `−1/(K−1)`.
pub fn standard_simplex_etf(k: usize) -> Result<Mat> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "simplex ETF requires K ≥ 2, got K={k}"
        )));
    }
    let kf = k as f64;
    let scale = (kf / (kf - 1.0)).sqrt();
    let mut m = Mat::from_elem((k, k), -scale / kf);
    for i in 0..k {
        m[[i, i]] += scale;
    }
    Ok(m)
}

/// A general simplex ETF in `R^d`: `P·M_std` for an orthonormal `d×K` frame
/// `P`. Columns are unit vectors summing to zero; the Gram matrix equals
/// `(K/(K−1))(I_K − (1/K)11^T)`.
pub fn general_simplex_etf(k: usize, d: usize, frame: &Frame) -> Result<Mat> {
    if d < k {
        return Err(Error::InvalidArgument(format!(
            "general simplex ETF requires d ≥ K, got d={d}, K={k}"
        )));
    }
    if frame.dim() != d || frame.classes() != k {
        return Err(Error::shape(
            "general_simplex_etf frame",
            (d, k),
            (frame.dim(), frame.classes()),
        ));
    }
    Ok(frame.matrix().dot(&standard_simplex_etf(k)?))
}

/// Deterministically orthonormalizes `K` i.i.d. standard-normal columns of
/// length `d`. Entries are drawn from a ChaCha8 stream seeded with `seed`,
/// in row-major order; orthonormalization is modified Gram-Schmidt with one
/// re-orthogonalization pass.
pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> Result<Frame> {
    if d < k || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "random orthonormal frame requires d ≥ K ≥ 1, got d={d}, K={k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..d * k)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut p = Mat::from_shape_vec((d, k), entries).expect("shape matches entry count");

    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let qi = p.column(i).to_owned();
                let proj = qi.dot(&p.column(j));
                let mut col = p.column_mut(j);
                col.scaled_add(-proj, &qi);
            }
        }
        let norm = p.column(j).dot(&p.column(j)).sqrt();
        if norm < 1e-12 {
            return Err(Error::NumericalFailure(
                "degenerate Gaussian draw during orthonormalization".into(),
            ));
        }
        p.column_mut(j).mapv_inplace(|x| x / norm);
    }
    Frame::new(p)
}

/// Column mean of a `d×K` matrix.
pub fn column_mean(m: &Mat) -> Array1<f64> {
    let k = m.ncols() as f64;
    m.sum_axis(ndarray::Axis(1)) / k
}
