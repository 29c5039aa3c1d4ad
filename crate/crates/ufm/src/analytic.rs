//! Closed-form global minimizers of the plain and two-layer objectives,
//! the scalar profile minimizations behind them, the quartic coupling the
//! two-layer singular values, ridge-regression weights, and the
//! attenuation constant for ridge regression on noisily collapsed
//! features.

use faer::linalg::solvers::Solve;
use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dims::{build_label_matrix, ProblemDims};
use crate::error::{Error, Result};
use crate::frames::{general_simplex_etf, random_orthonormal, Frame};
use crate::linalg::{frob, repeat_columns, Mat};
use crate::model::{Activation, ModelState, PlainState, TwoLayerState};

/// The constant `c = K·√(n·λ_H·λ_W)` separating the structured minimizer
/// regime (`c ≤ 1`) from the all-zero regime (`c > 1`).
#[derive(Clone, Copy, Debug)]
pub struct CollapseConstant {
    pub c: f64,
}

impl CollapseConstant {
    pub fn zero_regime(&self) -> bool {
        self.c > 1.0
    }
}

/// Computes `c = K·√(n·λ_H·λ_W)`.
pub fn collapse_constant(dims: &ProblemDims, lambda_w: f64, lambda_h: f64) -> CollapseConstant {
    CollapseConstant {
        c: dims.k as f64 * (dims.n as f64 * lambda_h * lambda_w).sqrt(),
    }
}

/// Minimizer and value of a scalar objective profile in the residual
/// variable `beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileMin {
    pub beta: f64,
    pub value: f64,
}

/// Profile minimum of the bias-free plain objective over its scalar
/// reduction: `(1−c, c − c²/2)` for `c ≤ 1`, else `(0, 1/2)`.
pub fn bias_free_profile_min(c: f64) -> ProfileMin {
    if c <= 1.0 {
        ProfileMin {
            beta: 1.0 - c,
            value: c - 0.5 * c * c,
        }
    } else {
        ProfileMin {
            beta: 0.0,
            value: 0.5,
        }
    }
}

/// Profile minimum of the unregularized-bias plain objective:
/// `((1−c)(K−1)/K, (K−1)/K·(c − c²/2))` for `c ≤ 1`, else
/// `(0, (K−1)/(2K))`.
pub fn unreg_bias_profile_min(c: f64, k: usize) -> ProfileMin {
    let ratio = (k as f64 - 1.0) / k as f64;
    if c <= 1.0 {
        ProfileMin {
            beta: (1.0 - c) * ratio,
            value: ratio * (c - 0.5 * c * c),
        }
    } else {
        ProfileMin {
            beta: 0.0,
            value: ratio * 0.5,
        }
    }
}

/// Scale constants of an analytic minimizer: the collapse constant for
/// the plain model, the two singular values for the two-layer models.
#[derive(Clone, Copy, Debug)]
pub enum OracleScales {
    Plain { c: f64 },
    TwoLayer { sigma_w: f64, sigma_hbar: f64 },
}

/// A closed-form global minimizer: the state, its objective value, the
/// squared norm `rho` of the top-level class-mean columns (0 in the zero
/// regime), and the scale constants it was built from.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub state: ModelState,
    pub objective: f64,
    pub rho: f64,
    pub is_zero: bool,
    pub scales: OracleScales,
}

fn check_plain_frame(dims: &ProblemDims, frame: &Frame) -> Result<()> {
    if frame.dim() != dims.d || frame.classes() != dims.k {
        return Err(Error::shape(
            "oracle frame",
            (dims.d, dims.k),
            (frame.dim(), frame.classes()),
        ));
    }
    Ok(())
}

/// Closed-form minimizer of the bias-free plain objective. For
/// `c = K√(nλ_Hλ_W) ≤ 1`: `ρ = (1−c)√(λ_W/(nλ_H))`, the class means are
/// `H̄ = √ρ·P` on the orthonormal frame `P`, `H* = H̄ ⊗ 1_n^T`, and
/// `W* = √(nλ_H/λ_W)·H̄^T`, with objective `c − c²/2`. For `c > 1` the
/// zero state with objective `1/2`.
pub fn plain_bias_free_minimizer(
    dims: &ProblemDims,
    lambda_w: f64,
    lambda_h: f64,
    frame: &Frame,
) -> Result<OracleSolution> {
    dims.validate()?;
    check_plain_frame(dims, frame)?;
    if lambda_w <= 0.0 || lambda_h <= 0.0 {
        return Err(Error::InvalidArgument(
            "regularization weights must be positive".into(),
        ));
    }
    let c = collapse_constant(dims, lambda_w, lambda_h).c;
    if c > 1.0 {
        return Ok(OracleSolution {
            state: ModelState::zeros_plain(dims, false),
            objective: 0.5,
            rho: 0.0,
            is_zero: true,
            scales: OracleScales::Plain { c },
        });
    }
    let n = dims.n as f64;
    let rho = (1.0 - c) * (lambda_w / (n * lambda_h)).sqrt();
    let hbar = frame.matrix() * rho.sqrt();
    let h = repeat_columns(&hbar, dims.n);
    let w = hbar.t().to_owned() * (n * lambda_h / lambda_w).sqrt();
    Ok(OracleSolution {
        state: ModelState::Plain(PlainState { w, h, b: None }),
        objective: c - 0.5 * c * c,
        rho,
        is_zero: false,
        scales: OracleScales::Plain { c },
    })
}

/// Closed-form minimizer of the unregularized-bias plain objective. For
/// `c ≤ 1`: `ρ = (1−c)(K−1)/K·√(λ_W/(nλ_H))`, class means are a simplex
/// ETF scaled to squared column norm `ρ` (zero global mean),
/// `W* = √(nλ_H/λ_W)·H̄^T`, `b* = (1/K)·1`, with objective
/// `(K−1)/K·(c − c²/2)`. For `c > 1` the zero state keeps `b* = (1/K)·1`.
pub fn plain_unreg_bias_minimizer(
    dims: &ProblemDims,
    lambda_w: f64,
    lambda_h: f64,
    frame: &Frame,
) -> Result<OracleSolution> {
    dims.validate()?;
    check_plain_frame(dims, frame)?;
    if lambda_w <= 0.0 || lambda_h <= 0.0 {
        return Err(Error::InvalidArgument(
            "regularization weights must be positive".into(),
        ));
    }
    let c = collapse_constant(dims, lambda_w, lambda_h).c;
    let kf = dims.k as f64;
    let bias = Array1::from_elem(dims.k, 1.0 / kf);
    if c > 1.0 {
        let mut state = ModelState::zeros_plain(dims, true);
        let ModelState::Plain(s) = &mut state else { unreachable!() };
        s.b = Some(bias);
        return Ok(OracleSolution {
            state,
            objective: (kf - 1.0) / (2.0 * kf),
            rho: 0.0,
            is_zero: true,
            scales: OracleScales::Plain { c },
        });
    }
    let n = dims.n as f64;
    let rho = (1.0 - c) * (kf - 1.0) / kf * (lambda_w / (n * lambda_h)).sqrt();
    let etf = general_simplex_etf(dims.k, dims.d, frame)?;
    let hbar = etf * rho.sqrt();
    let h = repeat_columns(&hbar, dims.n);
    let w = hbar.t().to_owned() * (n * lambda_h / lambda_w).sqrt();
    Ok(OracleSolution {
        state: ModelState::Plain(PlainState {
            w,
            h,
            b: Some(bias),
        }),
        objective: (kf - 1.0) / kf * (c - 0.5 * c * c),
        rho,
        is_zero: false,
        scales: OracleScales::Plain { c },
    })
}

/// Singular values solving the two-layer scalar subproblem, or the zero
/// regime when the all-zero state wins.
#[derive(Clone, Copy, Debug)]
pub struct TwoLayerScales {
    pub sigma_w: f64,
    pub sigma_hbar: f64,
    pub zero_regime: bool,
}

/// The scalar objective both singular values must minimize:
/// `f₁ = ½(σ_Wσ_H̄ − 1)² + K(λ_{W2}/2)σ_W² + K√(nλ_{W1}λ_{H1})σ_H̄`.
fn scalar_objective(sigma_w: f64, sigma_hbar: f64, k: f64, lambda_w2: f64, g: f64) -> f64 {
    0.5 * (sigma_w * sigma_hbar - 1.0).powi(2) + 0.5 * k * lambda_w2 * sigma_w * sigma_w
        + k * g * sigma_hbar
}

/// Value of the quartic `λ_{W2}σ⁴ − gσ + K·g²` at `sigma`, with
/// `g = √(nλ_{W1}λ_{H1})`.
fn quartic(sigma: f64, k: f64, lambda_w2: f64, g: f64) -> f64 {
    lambda_w2 * sigma.powi(4) - g * sigma + k * g * g
}

/// Solves the singular-value subproblem of the two-layer objective: finds
/// the nonnegative real roots of `λ_{W2}σ_W⁴ − √(nλ_{W1}λ_{H1})·σ_W +
/// K·n·λ_{W1}λ_{H1} = 0` through companion-matrix eigenvalues, pairs each
/// root with `σ_H̄ = λ_{W2}σ_W²/√(nλ_{W1}λ_{H1})`, and returns whichever
/// candidate (including `σ_W = 0`) minimizes the scalar objective.
pub fn two_layer_singular_values(
    k: usize,
    n: usize,
    lambda_w2: f64,
    lambda_w1: f64,
    lambda_h1: f64,
) -> Result<TwoLayerScales> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "class count and per-class sample count must be positive".into(),
        ));
    }
    if lambda_w2 <= 0.0 || lambda_w1 <= 0.0 || lambda_h1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "regularization weights must be positive".into(),
        ));
    }
    let kf = k as f64;
    let g = (n as f64 * lambda_w1 * lambda_h1).sqrt();

    // Monic form sigma^4 + p·sigma + q with p = -g/lambda_w2 and
    // q = K·g²/lambda_w2; its companion matrix has the roots as
    // eigenvalues.
    let p = -g / lambda_w2;
    let q = kf * g * g / lambda_w2;
    let rows = [
        [0.0, 0.0, 0.0, -q],
        [1.0, 0.0, 0.0, -p],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let companion = faer::Mat::from_fn(4, 4, |i, j| rows[i][j]);
    let eigen = companion
        .eigenvalues()
        .map_err(|_| Error::NumericalFailure("companion eigensolver did not converge".into()))?;

    let mut best = TwoLayerScales {
        sigma_w: 0.0,
        sigma_hbar: 0.0,
        zero_regime: true,
    };
    let mut best_value = 0.5;
    for ev in eigen {
        if ev.im.abs() > 1e-8 * (1.0 + ev.re.abs()) || ev.re <= 0.0 {
            continue;
        }
        let mut sigma = ev.re;
        for _ in 0..8 {
            let f = quartic(sigma, kf, lambda_w2, g);
            let df = 4.0 * lambda_w2 * sigma.powi(3) - g;
            if df == 0.0 {
                break;
            }
            let next = sigma - f / df;
            if !next.is_finite() {
                break;
            }
            if (next - sigma).abs() <= f64::EPSILON * sigma.abs() {
                sigma = next;
                break;
            }
            sigma = next;
        }
        if sigma <= 0.0 {
            continue;
        }
        let sigma_hbar = lambda_w2 * sigma * sigma / g;
        let value = scalar_objective(sigma, sigma_hbar, kf, lambda_w2, g);
        if value < best_value {
            best_value = value;
            best = TwoLayerScales {
                sigma_w: sigma,
                sigma_hbar,
                zero_regime: false,
            };
        }
    }
    Ok(best)
}

/// Minimum value of the two-layer objective implied by the singular-value
/// subproblem: the scalar objective at the solved pair, or `1/2` in the
/// zero regime.
pub fn two_layer_minimum_value(
    k: usize,
    n: usize,
    hyper: &crate::model::TwoLayerHyper,
) -> Result<f64> {
    let scales =
        two_layer_singular_values(k, n, hyper.lambda_w2, hyper.lambda_w1, hyper.lambda_h1)?;
    Ok(if scales.zero_regime {
        0.5
    } else {
        let g = (n as f64 * hyper.lambda_w1 * hyper.lambda_h1).sqrt();
        scalar_objective(
            scales.sigma_w,
            scales.sigma_hbar,
            k as f64,
            hyper.lambda_w2,
            g,
        )
    })
}

fn check_two_layer_frames(dims: &ProblemDims, frames: [&Frame; 2]) -> Result<()> {
    if dims.d <= dims.k {
        return Err(Error::InvalidArgument(format!(
            "two-layer minimizers require d > K, got d = {}, K = {}",
            dims.d, dims.k
        )));
    }
    for frame in frames {
        if frame.dim() != dims.d || frame.classes() != dims.k {
            return Err(Error::shape(
                "oracle frame",
                (dims.d, dims.k),
                (frame.dim(), frame.classes()),
            ));
        }
    }
    Ok(())
}

fn two_layer_minimizer_on_frames(
    dims: &ProblemDims,
    hyper: &crate::model::TwoLayerHyper,
    frame_r: &Frame,
    frame_rtilde: &Frame,
    activation: Activation,
) -> Result<OracleSolution> {
    dims.validate()?;
    check_two_layer_frames(dims, [frame_r, frame_rtilde])?;
    crate::model::Hyperparams::TwoLayer(*hyper).validate()?;

    let scales = two_layer_singular_values(
        dims.k,
        dims.n,
        hyper.lambda_w2,
        hyper.lambda_w1,
        hyper.lambda_h1,
    )?;
    if scales.zero_regime {
        return Ok(OracleSolution {
            state: ModelState::zeros_two_layer(dims, activation),
            objective: 0.5,
            rho: 0.0,
            is_zero: true,
            scales: OracleScales::TwoLayer {
                sigma_w: 0.0,
                sigma_hbar: 0.0,
            },
        });
    }
    let TwoLayerScales {
        sigma_w,
        sigma_hbar,
        ..
    } = scales;

    let n = dims.n as f64;
    let kf = dims.k as f64;
    let g = (n * hyper.lambda_w1 * hyper.lambda_h1).sqrt();
    // alpha balances the two bottom factors: W1 carries alpha^{1/4}√σ_H̄
    // and H̄1 carries alpha^{-1/4}√σ_H̄ with alpha = nλ_{H1}/λ_{W1}.
    let alpha = n * hyper.lambda_h1 / hyper.lambda_w1;
    let r = frame_r.matrix();
    let rt = frame_rtilde.matrix();

    let w2 = r.t().to_owned() * sigma_w;
    let w1 = r.dot(&rt.t()) * (alpha.powf(0.25) * sigma_hbar.sqrt());
    let hbar1 = rt * (alpha.powf(-0.25) * sigma_hbar.sqrt());
    let h1 = repeat_columns(&hbar1, dims.n);

    let objective = scalar_objective(sigma_w, sigma_hbar, kf, hyper.lambda_w2, g);
    Ok(OracleSolution {
        state: ModelState::TwoLayer(TwoLayerState {
            w2,
            w1,
            h1,
            activation,
        }),
        objective,
        rho: sigma_hbar * sigma_hbar,
        is_zero: false,
        scales: OracleScales::TwoLayer {
            sigma_w,
            sigma_hbar,
        },
    })
}

/// Closed-form minimizer of the linear two-layer objective on two
/// orthonormal frames `R`, `R̃`: `W₂* = σ_W·R^T`,
/// `W₁* = α^{1/4}√σ_H̄·R·R̃^T`, `H₁* = α^{−1/4}√σ_H̄·R̃ ⊗ 1_n^T` with
/// `α = nλ_{H1}/λ_{W1}`, so that both `H̄₁` and `W₁H̄₁` are scaled
/// orthonormal frames and `W₂W₁H̄₁ = σ_Wσ_H̄·I_K`.
pub fn two_layer_linear_minimizer(
    dims: &ProblemDims,
    hyper: &crate::model::TwoLayerHyper,
    frame_r: &Frame,
    frame_rtilde: &Frame,
) -> Result<OracleSolution> {
    two_layer_minimizer_on_frames(dims, hyper, frame_r, frame_rtilde, Activation::Linear)
}

/// Closed-form minimizer of the ReLU two-layer objective: the linear
/// construction on axis-aligned frames, which makes `W₂*`, `W₁*H₁*`, and
/// `H₁*` entrywise nonnegative so the ReLU acts as the identity there.
pub fn two_layer_relu_minimizer(
    dims: &ProblemDims,
    hyper: &crate::model::TwoLayerHyper,
) -> Result<OracleSolution> {
    let frame = Frame::axis_aligned(dims.d, dims.k)?;
    two_layer_minimizer_on_frames(dims, hyper, &frame, &frame, Activation::Relu)
}

/// Ridge-regression weights `Ŵ = (1/(Kn))·Y·H^T·((1/(Kn))·H·H^T +
/// λ_W·I)^{−1}`, computed by a Cholesky solve of the symmetric
/// positive-definite system.
pub fn ridge_weights(h: &Mat, y: &Mat, dims: &ProblemDims, lambda_w: f64) -> Result<Mat> {
    let total = dims.total();
    if h.ncols() != total || h.nrows() != dims.d {
        return Err(Error::shape("H", (dims.d, total), h.dim()));
    }
    if y.dim() != (dims.k, total) {
        return Err(Error::shape("Y", (dims.k, total), y.dim()));
    }
    if lambda_w <= 0.0 {
        return Err(Error::InvalidArgument(
            "ridge weight must be positive".into(),
        ));
    }
    let kn = total as f64;
    let mut gram = h.dot(&h.t()) / kn;
    for i in 0..dims.d {
        gram[[i, i]] += lambda_w;
    }
    let rhs = h.dot(&y.t()) / kn;

    let chol = crate::linalg::to_faer(&gram)
        .llt(faer::Side::Lower)
        .map_err(|_| Error::NumericalFailure("ridge system is not positive definite".into()))?;
    let solved = chol.solve(crate::linalg::to_faer(&rhs));
    let x = crate::linalg::from_faer(solved.as_ref());
    Ok(x.t().to_owned())
}

/// Attenuation constant `κ = 1/(1 + σ_e²·K·√(λ̃_H/λ_W))` by which ridge
/// weights on noisily collapsed features shrink relative to the clean
/// minimizer as `n` grows.
pub fn asymptotic_attenuation(sigma_e: f64, k: usize, lambda_h_tilde: f64, lambda_w: f64) -> f64 {
    1.0 / (1.0 + sigma_e * sigma_e * k as f64 * (lambda_h_tilde / lambda_w).sqrt())
}

/// Distribution of the feature perturbation entries. Both choices have
/// zero mean and variance `σ_e²`; uniform draws from
/// `[−σ_e√3, σ_e√3]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

/// One Monte-Carlo measurement of the ridge attenuation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticSample {
    pub n: usize,
    pub trial: u64,
    pub rel_err: f64,
}

/// Aggregated Monte-Carlo results of the ridge attenuation experiment.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticResult {
    pub kappa: f64,
    pub samples: Vec<AsymptoticSample>,
    pub per_n_mean: Vec<PerNMean>,
}

/// Mean relative error across trials at one sample count.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PerNMean {
    pub n: usize,
    pub mean_rel_err: f64,
}

fn sample_noise<R: rand::Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    sigma_e: f64,
    noise: NoiseKind,
) -> Mat {
    let data: Vec<f64> = match noise {
        NoiseKind::Gaussian => (0..rows * cols)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * sigma_e
            })
            .collect(),
        NoiseKind::Uniform => {
            let half_width = sigma_e * 3.0_f64.sqrt();
            let dist = Uniform::new_inclusive(-half_width, half_width);
            (0..rows * cols).map(|_| dist.sample(rng)).collect()
        }
    };
    Mat::from_shape_vec((rows, cols), data).expect("shape matches data length")
}

/// Runs the ridge attenuation experiment: for each `n` in `n_values` and
/// each trial, builds the collapsed minimizer features with
/// `λ_H = λ̃_H/n`, perturbs them entrywise, solves the ridge problem, and
/// records `‖Ŵ − κW*‖_F/‖κW*‖_F`. The frame is drawn once from `seed`;
/// trial noise uses per-cell derived seeds, making every cell
/// reproducible in isolation.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_experiment(
    k: usize,
    d: usize,
    lambda_w: f64,
    lambda_h_tilde: f64,
    sigma_e: f64,
    noise: NoiseKind,
    n_values: &[usize],
    trials: u64,
    seed: u64,
) -> Result<AsymptoticResult> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument(
            "n_values must be nonempty".into(),
        ));
    }
    if !n_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "n_values must be strictly increasing".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if lambda_w <= 0.0 || lambda_h_tilde <= 0.0 {
        return Err(Error::InvalidArgument(
            "regularization weights must be positive".into(),
        ));
    }
    if sigma_e < 0.0 || !sigma_e.is_finite() {
        return Err(Error::InvalidArgument(
            "noise level must be nonnegative and finite".into(),
        ));
    }

    let frame = random_orthonormal(d, k, seed)?;
    let kappa = asymptotic_attenuation(sigma_e, k, lambda_h_tilde, lambda_w);
    let mut samples = Vec::with_capacity(n_values.len() * trials as usize);
    let mut per_n_mean = Vec::with_capacity(n_values.len());
    for (n_idx, &n) in n_values.iter().enumerate() {
        let dims = ProblemDims::new(k, d, n)?;
        let lambda_h = lambda_h_tilde / n as f64;
        let oracle = plain_bias_free_minimizer(&dims, lambda_w, lambda_h, &frame)?;
        if oracle.is_zero {
            return Err(Error::InvalidArgument(
                "attenuation experiment requires the structured regime (c <= 1)".into(),
            ));
        }
        let ModelState::Plain(clean) = &oracle.state else { unreachable!() };
        let target = &clean.w * kappa;
        let target_norm = frob(&target);
        let y = build_label_matrix(&dims);

        let mut total = 0.0;
        for trial in 0..trials {
            let cell_seed = seed
                .wrapping_add(1)
                .wrapping_add(n_idx as u64)
                .wrapping_mul(trials)
                .wrapping_add(trial);
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
            let mut features = clean.h.clone();
            if sigma_e > 0.0 {
                features += &sample_noise(&mut rng, dims.d, dims.total(), sigma_e, noise);
            }
            let fitted = ridge_weights(&features, &y, &dims, lambda_w)?;
            let rel_err = frob(&(&fitted - &target)) / target_norm;
            samples.push(AsymptoticSample { n, trial, rel_err });
            total += rel_err;
        }
        per_n_mean.push(PerNMean {
            n,
            mean_rel_err: total / trials as f64,
        });
    }
    Ok(AsymptoticResult {
        kappa,
        samples,
        per_n_mean,
    })
}
