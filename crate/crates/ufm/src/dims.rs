//! Problem dimensions and the one-hot label matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Dimensions of one classification problem: `K` classes, feature dimension
/// `d`, `n` samples per class. The total sample count `N = K·n` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDims {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub n: usize,
}

impl ProblemDims {
    pub fn new(k: usize, d: usize, n: usize) -> Result<Self> {
        let dims = ProblemDims { k, d, n };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 || self.n == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive (K={}, d={}, n={})",
                self.k, self.d, self.n
            )));
        }
        Ok(())
    }

    /// Total number of samples `N = K·n`.
    pub fn total(&self) -> usize {
        self.k * self.n
    }
}

/// Builds the one-hot label matrix `Y = I_K ⊗ 1_n^T` (`K×N`). Columns are in
/// class-major order: column `k·n + i` is the `k`-th standard basis vector.
pub fn build_label_matrix(dims: &ProblemDims) -> Mat {
    let mut y = Mat::zeros((dims.k, dims.total()));
    for k in 0..dims.k {
        for i in 0..dims.n {
            y[[k, k * dims.n + i]] = 1.0;
        }
    }
    y
}
