//! Dense f64 matrix primitives shared by the whole crate: finiteness
//! validation, Frobenius norms, SVD-backed pseudoinverse and nuclear norm,
//! and conversions to the decomposition backend.
//!
//! Matrices are `ndarray::Array2<f64>` in standard (row-major) layout.
//! Decompositions (SVD, eigenvalues, Cholesky) run through faer, which
//! only ever sees the small matrices (scatter matrices, Gram matrices,
//! companion matrices), never the optimization hot path.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Dense real matrix with 64-bit entries.
pub type Mat = Array2<f64>;

/// Errors unless every entry of `m` is finite (no NaN/Inf).
pub fn ensure_finite(context: &'static str, m: &Mat) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Errors unless every entry of `v` is finite.
pub fn ensure_finite_vec(context: &'static str, v: &Array1<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Sum of squared entries (squared Frobenius norm).
pub fn frob2(m: &Mat) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Frobenius norm.
pub fn frob(m: &Mat) -> f64 {
    frob2(m).sqrt()
}

/// Squared Euclidean norm of a vector.
pub fn norm2_vec(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Repeats each column of `m` `n` times: `m ⊗ 1_n^T`. Column `k` of `m`
/// becomes columns `k*n..(k+1)*n` of the result, copied bitwise.
pub fn repeat_columns(m: &Mat, n: usize) -> Mat {
    let (d, k) = m.dim();
    let mut out = Mat::zeros((d, k * n));
    for j in 0..k {
        for i in 0..n {
            out.column_mut(j * n + i).assign(&m.column(j));
        }
    }
    out
}

pub(crate) fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin SVD `M = U diag(s) V^T` with `U: rows×r`, `V^T: r×cols`,
/// `r = min(rows, cols)`. Singular values are nonnegative and sorted in
/// nonincreasing order.
pub struct Svd {
    pub u: Mat,
    pub s: Array1<f64>,
    pub vt: Mat,
}

/// Computes a thin SVD. Reports non-convergence of the iteration as a
/// numerical failure.
pub fn svd(m: &Mat) -> Result<Svd> {
    ensure_finite("svd input", m)?;
    let decomp = to_faer(m)
        .thin_svd()
        .map_err(|_| Error::NumericalFailure("SVD did not converge".into()))?;
    let r = m.nrows().min(m.ncols());
    let s = Array1::from_iter((0..r).map(|i| decomp.S()[i]));
    let u = from_faer(decomp.U());
    let v = decomp.V();
    let vt = Mat::from_shape_fn((r, m.ncols()), |(i, j)| v[(j, i)]);
    Ok(Svd { u, s, vt })
}

/// Singular values only, sorted in nonincreasing order.
pub fn singular_values(m: &Mat) -> Result<Array1<f64>> {
    Ok(svd(m)?.s)
}

/// Relative cutoff used by [`pseudoinverse`] when none is supplied:
/// `1e-10 · max(rows, cols)`.
pub fn default_pinv_rtol(rows: usize, cols: usize) -> f64 {
    1e-10 * rows.max(cols) as f64
}

/// Moore-Penrose pseudoinverse via SVD. Singular values `σ ≤ rtol·σ_max`
/// are treated as exactly zero; `rtol` defaults to
/// [`default_pinv_rtol`]`(rows, cols)`.
pub fn pseudoinverse(m: &Mat, rtol: Option<f64>) -> Result<Mat> {
    let (rows, cols) = m.dim();
    let rtol = rtol.unwrap_or_else(|| default_pinv_rtol(rows, cols));
    let Svd { u, s, vt } = svd(m)?;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rtol * smax;
    // pinv = V diag(1/σ_i) U^T over the retained singular values.
    let mut out = Mat::zeros((cols, rows));
    for (i, &sig) in s.iter().enumerate() {
        if sig > cutoff {
            let vi = vt.row(i);
            let ui = u.column(i);
            let inv = 1.0 / sig;
            for (a, &v) in vi.iter().enumerate() {
                for (b, &uu) in ui.iter().enumerate() {
                    out[[a, b]] += v * inv * uu;
                }
            }
        }
    }
    Ok(out)
}

/// Nuclear norm: the sum of singular values.
pub fn nuclear_norm(m: &Mat) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}
