//! Neural-collapse metric suite: within/between-class scatter, the NC1
//! collapse ratio, NC2 distances to orthogonal and simplex-ETF Gram
//! structure, NC3 self-duality, and per-variant report assembly.

use ndarray::Axis;
use serde::Serialize;

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::linalg::{frob, pseudoinverse, Mat};
use crate::model::{Activation, ModelState};

/// Within- and between-class second-moment matrices, both `d×d`.
#[derive(Clone, Debug)]
pub struct ScatterPair {
    pub sigma_w: Mat,
    pub sigma_b: Mat,
}

/// A metric value with a degeneracy flag. Degenerate inputs (zero class
/// means or zero weights) make the usual normalizations undefined; the
/// value then reports the convention noted on each metric.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

impl Metric {
    fn clean(value: f64) -> Self {
        Metric {
            value,
            degenerate: false,
        }
    }

    fn degenerate(value: f64) -> Self {
        Metric {
            value,
            degenerate: true,
        }
    }
}

fn check_features(h: &Mat, dims: &ProblemDims) -> Result<()> {
    if dims.k < 2 {
        return Err(Error::InvalidArgument(
            "metrics require at least two classes".into(),
        ));
    }
    let total = dims.total();
    if h.ncols() != total {
        return Err(Error::shape("features", (h.nrows(), total), h.dim()));
    }
    Ok(())
}

/// Class means `H̄` (feature dim × K, column k the mean of class k) and the
/// global mean vector.
pub fn class_means(h: &Mat, dims: &ProblemDims) -> Result<(Mat, ndarray::Array1<f64>)> {
    check_features(h, dims)?;
    let rows = h.nrows();
    let mut means = Mat::zeros((rows, dims.k));
    for k in 0..dims.k {
        let block = h.slice(ndarray::s![.., k * dims.n..(k + 1) * dims.n]);
        means
            .column_mut(k)
            .assign(&block.mean_axis(Axis(1)).expect("n >= 1"));
    }
    let global = means.mean_axis(Axis(1)).expect("k >= 1");
    Ok((means, global))
}

/// Scatter matrices of organized features:
/// `Σ_W = (1/N) Σ_k Σ_i (h_{k,i} − h̄_k)(h_{k,i} − h̄_k)^T` and
/// `Σ_B = (1/K) Σ_k (h̄_k − h_G)(h̄_k − h_G)^T`.
pub fn scatter_matrices(h: &Mat, dims: &ProblemDims) -> Result<ScatterPair> {
    let (means, global) = class_means(h, dims)?;
    let rows = h.nrows();
    let total = dims.total() as f64;

    let mut centered = h.clone();
    for k in 0..dims.k {
        let mean_k = means.column(k);
        let mut block = centered.slice_mut(ndarray::s![.., k * dims.n..(k + 1) * dims.n]);
        for mut col in block.axis_iter_mut(Axis(1)) {
            col -= &mean_k;
        }
    }
    let sigma_w = centered.dot(&centered.t()) / total;

    let mut dev = means;
    for mut col in dev.axis_iter_mut(Axis(1)) {
        col -= &global;
    }
    let sigma_b = dev.dot(&dev.t()) / dims.k as f64;

    debug_assert_eq!(sigma_w.dim(), (rows, rows));
    Ok(ScatterPair { sigma_w, sigma_b })
}

/// NC1 variability collapse: `tr(Σ_W Σ_B†)/K`. Degenerate when `Σ_B = 0`
/// (value 0 if `Σ_W = 0` too, else infinity is avoided by reporting the
/// raw trace against the zero pseudoinverse, which is 0; the flag marks
/// the case).
pub fn nc1(h: &Mat, dims: &ProblemDims) -> Result<Metric> {
    let ScatterPair { sigma_w, sigma_b } = scatter_matrices(h, dims)?;
    let degenerate = frob(&sigma_b) == 0.0;
    let pinv = pseudoinverse(&sigma_b, None)?;
    let prod = sigma_w.dot(&pinv);
    let trace = prod.diag().sum() / dims.k as f64;
    Ok(if degenerate {
        Metric::degenerate(trace)
    } else {
        Metric::clean(trace)
    })
}

/// NC2 distance of the class-mean Gram matrix to the orthogonal target:
/// `‖H̄^T H̄/‖H̄^T H̄‖_F − I/√K‖_F`. Degenerate value 1 when `H̄ = 0`.
pub fn nc2_of(hbar: &Mat) -> Result<Metric> {
    let k = hbar.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "nc2 requires at least two classes".into(),
        ));
    }
    let gram = hbar.t().dot(hbar);
    let norm = frob(&gram);
    if norm == 0.0 {
        return Ok(Metric::degenerate(1.0));
    }
    let target = 1.0 / (k as f64).sqrt();
    let mut diff = gram / norm;
    for i in 0..k {
        diff[[i, i]] -= target;
    }
    Ok(Metric::clean(frob(&diff)))
}

/// NC2 distance of the (optionally centered) class-mean Gram matrix to the
/// simplex-ETF target `(I − 11^T/K)/√(K−1)`. Degenerate value 1 when the
/// (centered) means vanish.
pub fn nc2_etf(hbar: &Mat, center: bool) -> Result<Metric> {
    let k = hbar.ncols();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "nc2 requires at least two classes".into(),
        ));
    }
    let mut m = hbar.clone();
    if center {
        let global = m.mean_axis(Axis(1)).expect("k >= 1");
        for mut col in m.axis_iter_mut(Axis(1)) {
            col -= &global;
        }
    }
    let gram = m.t().dot(&m);
    let norm = frob(&gram);
    if norm == 0.0 {
        return Ok(Metric::degenerate(1.0));
    }
    let kf = k as f64;
    let scale = 1.0 / (kf - 1.0).sqrt();
    let mut diff = gram / norm;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j {
                scale * (1.0 - 1.0 / kf)
            } else {
                scale * (-1.0 / kf)
            };
            diff[[i, j]] -= target;
        }
    }
    Ok(Metric::clean(frob(&diff)))
}

/// NC3 self-duality: `‖W/‖W‖_F − H̄^T/‖H̄‖_F‖_F`. Degenerate value 1 when
/// either factor vanishes.
pub fn nc3(w: &Mat, hbar: &Mat) -> Result<Metric> {
    if w.nrows() != hbar.ncols() || w.ncols() != hbar.nrows() {
        return Err(Error::shape(
            "NC3 weight/mean alignment",
            (hbar.ncols(), hbar.nrows()),
            w.dim(),
        ));
    }
    let wn = frob(w);
    let hn = frob(hbar);
    if wn == 0.0 || hn == 0.0 {
        return Ok(Metric::degenerate(1.0));
    }
    let mut diff = w / wn;
    diff.zip_mut_with(&hbar.t(), |a, &b| *a -= b / hn);
    Ok(Metric::clean(frob(&diff)))
}

/// Feature level a metric row refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLevel {
    /// Plain-model features `H`.
    H,
    /// Two-layer bottom features `H₁`.
    H1,
    /// Two-layer linear top features `H₂ = W₁H₁`.
    H2,
    /// ReLU pre-activation `W₁H₁`.
    Pre,
    /// ReLU post-activation `σ(W₁H₁)`.
    Post,
}

impl FeatureLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureLevel::H => "h",
            FeatureLevel::H1 => "h1",
            FeatureLevel::H2 => "h2",
            FeatureLevel::Pre => "pre",
            FeatureLevel::Post => "post",
        }
    }
}

/// NC1/NC2 metrics of one feature level.
#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: FeatureLevel,
    pub nc1: Metric,
    pub nc2_of: Metric,
    pub nc2_etf: Metric,
}

/// Full metric report: one row per feature level plus the NC3 alignment
/// between the classifier and the top-level class means.
#[derive(Clone, Debug, Serialize)]
pub struct NcReport {
    pub levels: Vec<LevelReport>,
    pub nc3: Metric,
}

impl NcReport {
    pub fn level(&self, level: FeatureLevel) -> Option<&LevelReport> {
        self.levels.iter().find(|r| r.level == level)
    }
}

fn level_report(
    level: FeatureLevel,
    h: &Mat,
    dims: &ProblemDims,
    center: bool,
) -> Result<LevelReport> {
    let (means, _) = class_means(h, dims)?;
    Ok(LevelReport {
        level,
        nc1: nc1(h, dims)?,
        nc2_of: nc2_of(&means)?,
        nc2_etf: nc2_etf(&means, center)?,
    })
}

/// Metric report for an optimization state. Plain models report level `h`;
/// linear two-layer models report `h1` and `h2`; ReLU models report `h1`,
/// `pre`, and `post`. NC3 always pairs the top classifier with the means
/// of the features it multiplies.
pub fn nc_report(state: &ModelState, dims: &ProblemDims, center: bool) -> Result<NcReport> {
    match state {
        ModelState::Plain(s) => {
            let (means, _) = class_means(&s.h, dims)?;
            Ok(NcReport {
                levels: vec![level_report(FeatureLevel::H, &s.h, dims, center)?],
                nc3: nc3(&s.w, &means)?,
            })
        }
        ModelState::TwoLayer(s) => {
            let pre = s.preactivation();
            match s.activation {
                Activation::Linear => {
                    let (top_means, _) = class_means(&pre, dims)?;
                    Ok(NcReport {
                        levels: vec![
                            level_report(FeatureLevel::H1, &s.h1, dims, center)?,
                            level_report(FeatureLevel::H2, &pre, dims, center)?,
                        ],
                        nc3: nc3(&s.w2, &top_means)?,
                    })
                }
                Activation::Relu => {
                    let post = pre.mapv(|x| x.max(0.0));
                    let (top_means, _) = class_means(&post, dims)?;
                    Ok(NcReport {
                        levels: vec![
                            level_report(FeatureLevel::H1, &s.h1, dims, center)?,
                            level_report(FeatureLevel::Pre, &pre, dims, center)?,
                            level_report(FeatureLevel::Post, &post, dims, center)?,
                        ],
                        nc3: nc3(&s.w2, &top_means)?,
                    })
                }
            }
        }
    }
}

/// Metric report for a bare feature matrix, with NC3 included when a
/// classifier is supplied.
pub fn features_report(
    h: &Mat,
    w: Option<&Mat>,
    dims: &ProblemDims,
    center: bool,
) -> Result<NcReport> {
    let (means, _) = class_means(h, dims)?;
    let nc3 = match w {
        Some(w) => nc3(w, &means)?,
        None => Metric::degenerate(1.0),
    };
    Ok(NcReport {
        levels: vec![level_report(FeatureLevel::H, h, dims, center)?],
        nc3,
    })
}
