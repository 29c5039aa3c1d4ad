//! Objectives and analytic gradients for the five model variants, the
//! closed-form optimal bias, and a central finite-difference gradient
//! checker.
//!
//! All objectives share the organized class-major column ordering under
//! which the label matrix is `Y = I_K ⊗ 1_n^T`:
//!
//! * plain: `(1/(2Kn))‖WH + b1^T − Y‖² + (λ_W/2)‖W‖² + (λ_H/2)‖H‖² + (λ_b/2)‖b‖²`
//!   with the bias terms dropped per [`BiasMode`];
//! * two-layer: `(1/(2Kn))‖W₂·a(W₁H₁) − Y‖²` plus the three Frobenius
//!   penalties, where `a` is identity or elementwise ReLU.

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_finite_vec, frob2, norm2_vec, Mat};

/// Bias handling of the plain model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasMode {
    /// No bias variable at all (fixed `b = 0`).
    BiasFree,
    /// Free bias, no penalty (`λ_b = 0`).
    Unregularized,
    /// Free bias with ridge penalty `(λ_b/2)‖b‖²`.
    Regularized(f64),
}

impl BiasMode {
    pub fn has_bias(&self) -> bool {
        !matches!(self, BiasMode::BiasFree)
    }

    pub fn lambda_b(&self) -> f64 {
        match self {
            BiasMode::Regularized(l) => *l,
            _ => 0.0,
        }
    }
}

/// Regularization weights of the plain model.
#[derive(Clone, Copy, Debug)]
pub struct PlainHyper {
    pub lambda_w: f64,
    pub lambda_h: f64,
    pub bias: BiasMode,
}

/// Regularization weights of the two-layer model.
#[derive(Clone, Copy, Debug)]
pub struct TwoLayerHyper {
    pub lambda_w2: f64,
    pub lambda_w1: f64,
    pub lambda_h1: f64,
}

/// Hyperparameters for either model family.
#[derive(Clone, Copy, Debug)]
pub enum Hyperparams {
    Plain(PlainHyper),
    TwoLayer(TwoLayerHyper),
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Hyperparams::Plain(h) => {
                h.lambda_w > 0.0
                    && h.lambda_h > 0.0
                    && match h.bias {
                        BiasMode::Regularized(l) => l > 0.0,
                        _ => true,
                    }
            }
            Hyperparams::TwoLayer(h) => {
                h.lambda_w2 > 0.0 && h.lambda_w1 > 0.0 && h.lambda_h1 > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "regularization weights must be positive".into(),
            ))
        }
    }
}

/// Activation applied between the two weight layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
}

/// The five model variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    PlainBiasFree,
    PlainUnregBias,
    PlainRegBias,
    TwoLayerLinear,
    TwoLayerRelu,
}

impl Variant {
    pub fn is_two_layer(&self) -> bool {
        matches!(self, Variant::TwoLayerLinear | Variant::TwoLayerRelu)
    }

    pub fn has_bias(&self) -> bool {
        matches!(self, Variant::PlainUnregBias | Variant::PlainRegBias)
    }

    pub fn activation(&self) -> Option<Activation> {
        match self {
            Variant::TwoLayerLinear => Some(Activation::Linear),
            Variant::TwoLayerRelu => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::PlainBiasFree => "plain_bias_free",
            Variant::PlainUnregBias => "plain_unreg_bias",
            Variant::PlainRegBias => "plain_reg_bias",
            Variant::TwoLayerLinear => "two_layer_linear",
            Variant::TwoLayerRelu => "two_layer_relu",
        }
    }
}

/// Variables of the plain model: `W: K×d`, `H: d×N`, optional bias `b: K`.
#[derive(Clone, Debug)]
pub struct PlainState {
    pub w: Mat,
    pub h: Mat,
    pub b: Option<Array1<f64>>,
}

/// Variables of the two-layer model: `W₂: K×d`, `W₁: d×d`, `H₁: d×N`.
#[derive(Clone, Debug)]
pub struct TwoLayerState {
    pub w2: Mat,
    pub w1: Mat,
    pub h1: Mat,
    pub activation: Activation,
}

impl TwoLayerState {
    /// Pre-activation features `W₁H₁`.
    pub fn preactivation(&self) -> Mat {
        self.w1.dot(&self.h1)
    }

    /// Top-level features: `W₁H₁` for linear, `σ(W₁H₁)` for ReLU.
    pub fn top_features(&self) -> Mat {
        let pre = self.preactivation();
        match self.activation {
            Activation::Linear => pre,
            Activation::Relu => pre.mapv(|x| x.max(0.0)),
        }
    }
}

/// Optimization variables of one model variant. Gradients reuse this type
/// as a same-shaped bundle of partial derivatives.
#[derive(Clone, Debug)]
pub enum ModelState {
    Plain(PlainState),
    TwoLayer(TwoLayerState),
}

impl ModelState {
    /// All-zero plain state.
    pub fn zeros_plain(dims: &ProblemDims, with_bias: bool) -> Self {
        ModelState::Plain(PlainState {
            w: Mat::zeros((dims.k, dims.d)),
            h: Mat::zeros((dims.d, dims.total())),
            b: with_bias.then(|| Array1::zeros(dims.k)),
        })
    }

    /// All-zero two-layer state.
    pub fn zeros_two_layer(dims: &ProblemDims, activation: Activation) -> Self {
        ModelState::TwoLayer(TwoLayerState {
            w2: Mat::zeros((dims.k, dims.d)),
            w1: Mat::zeros((dims.d, dims.d)),
            h1: Mat::zeros((dims.d, dims.total())),
            activation,
        })
    }

    pub fn variant_matches(&self, hyper: &Hyperparams) -> bool {
        matches!(
            (self, hyper),
            (ModelState::Plain(_), Hyperparams::Plain(_))
                | (ModelState::TwoLayer(_), Hyperparams::TwoLayer(_))
        )
    }

    pub fn check_shapes(&self, dims: &ProblemDims) -> Result<()> {
        let total = dims.total();
        match self {
            ModelState::Plain(s) => {
                if s.w.dim() != (dims.k, dims.d) {
                    return Err(Error::shape("W", (dims.k, dims.d), s.w.dim()));
                }
                if s.h.dim() != (dims.d, total) {
                    return Err(Error::shape("H", (dims.d, total), s.h.dim()));
                }
                if let Some(b) = &s.b {
                    if b.len() != dims.k {
                        return Err(Error::shape("b", (dims.k, 1), (b.len(), 1)));
                    }
                }
            }
            ModelState::TwoLayer(s) => {
                if s.w2.dim() != (dims.k, dims.d) {
                    return Err(Error::shape("W2", (dims.k, dims.d), s.w2.dim()));
                }
                if s.w1.dim() != (dims.d, dims.d) {
                    return Err(Error::shape("W1", (dims.d, dims.d), s.w1.dim()));
                }
                if s.h1.dim() != (dims.d, total) {
                    return Err(Error::shape("H1", (dims.d, total), s.h1.dim()));
                }
            }
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self {
            ModelState::Plain(s) => {
                ensure_finite("W", &s.w)?;
                ensure_finite("H", &s.h)?;
                if let Some(b) = &s.b {
                    ensure_finite_vec("b", b)?;
                }
            }
            ModelState::TwoLayer(s) => {
                ensure_finite("W2", &s.w2)?;
                ensure_finite("W1", &s.w1)?;
                ensure_finite("H1", &s.h1)?;
            }
        }
        Ok(())
    }

    /// Total Frobenius norm over all parts.
    pub fn norm(&self) -> f64 {
        let sq: f64 = match self {
            ModelState::Plain(s) => {
                frob2(&s.w) + frob2(&s.h) + s.b.as_ref().map_or(0.0, norm2_vec)
            }
            ModelState::TwoLayer(s) => frob2(&s.w2) + frob2(&s.w1) + frob2(&s.h1),
        };
        sq.sqrt()
    }

    /// `self += alpha · other`. Panics if the variants or shapes disagree;
    /// both sides always come from the same problem inside this crate.
    pub fn scaled_add(&mut self, alpha: f64, other: &ModelState) {
        match (self, other) {
            (ModelState::Plain(a), ModelState::Plain(b)) => {
                a.w.scaled_add(alpha, &b.w);
                a.h.scaled_add(alpha, &b.h);
                match (&mut a.b, &b.b) {
                    (Some(ab), Some(bb)) => ab.scaled_add(alpha, bb),
                    (None, None) => {}
                    _ => panic!("bias presence mismatch in scaled_add"),
                }
            }
            (ModelState::TwoLayer(a), ModelState::TwoLayer(b)) => {
                a.w2.scaled_add(alpha, &b.w2);
                a.w1.scaled_add(alpha, &b.w1);
                a.h1.scaled_add(alpha, &b.h1);
            }
            _ => panic!("variant mismatch in scaled_add"),
        }
    }

    /// Flat coordinate count over all parts.
    pub fn num_coords(&self) -> usize {
        match self {
            ModelState::Plain(s) => {
                s.w.len() + s.h.len() + s.b.as_ref().map_or(0, |b| b.len())
            }
            ModelState::TwoLayer(s) => s.w2.len() + s.w1.len() + s.h1.len(),
        }
    }

    fn num_parts(&self) -> usize {
        match self {
            ModelState::Plain(s) => 2 + usize::from(s.b.is_some()),
            ModelState::TwoLayer(_) => 3,
        }
    }

    fn part_slice_mut(&mut self, part: usize) -> &mut [f64] {
        match self {
            ModelState::Plain(s) => match part {
                0 => s.w.as_slice_mut().expect("contiguous"),
                1 => s.h.as_slice_mut().expect("contiguous"),
                2 => s.b.as_mut().expect("bias present").as_slice_mut().expect("contiguous"),
                _ => panic!("part out of range"),
            },
            ModelState::TwoLayer(s) => match part {
                0 => s.w2.as_slice_mut().expect("contiguous"),
                1 => s.w1.as_slice_mut().expect("contiguous"),
                2 => s.h1.as_slice_mut().expect("contiguous"),
                _ => panic!("part out of range"),
            },
        }
    }

    fn part_len(&self, part: usize) -> usize {
        match self {
            ModelState::Plain(s) => match part {
                0 => s.w.len(),
                1 => s.h.len(),
                2 => s.b.as_ref().expect("bias present").len(),
                _ => panic!("part out of range"),
            },
            ModelState::TwoLayer(s) => match part {
                0 => s.w2.len(),
                1 => s.w1.len(),
                2 => s.h1.len(),
                _ => panic!("part out of range"),
            },
        }
    }

    /// Sets every coordinate to zero, preserving shapes and variant.
    pub fn zeroed(&self) -> ModelState {
        let mut z = self.clone();
        for part in 0..z.num_parts() {
            z.part_slice_mut(part).fill(0.0);
        }
        z
    }
}

/// Objective value together with its gradient bundle.
#[derive(Clone, Debug)]
pub struct EvalResult {
    pub objective: f64,
    pub grad: ModelState,
}

impl EvalResult {
    /// Euclidean norm of the full gradient bundle.
    pub fn grad_norm(&self) -> f64 {
        self.grad.norm()
    }
}

/// Evaluates the plain objective and its exact gradients:
/// `∂W = (1/(Kn))(WH + b1^T − Y)H^T + λ_W·W`, symmetrically for `H`, and
/// `∂b = (1/(Kn))(WH + b1^T − Y)1 + λ_b·b`.
pub fn eval_plain(
    state: &PlainState,
    y: &Mat,
    dims: &ProblemDims,
    hyper: &PlainHyper,
) -> Result<EvalResult> {
    let total = dims.total();
    if state.w.dim() != (dims.k, dims.d) {
        return Err(Error::shape("W", (dims.k, dims.d), state.w.dim()));
    }
    if state.h.dim() != (dims.d, total) {
        return Err(Error::shape("H", (dims.d, total), state.h.dim()));
    }
    if y.dim() != (dims.k, total) {
        return Err(Error::shape("Y", (dims.k, total), y.dim()));
    }
    match (&state.b, hyper.bias.has_bias()) {
        (Some(b), true) => {
            if b.len() != dims.k {
                return Err(Error::shape("b", (dims.k, 1), (b.len(), 1)));
            }
        }
        (None, false) => {}
        (Some(_), false) => {
            return Err(Error::InvalidArgument(
                "bias present but bias mode is bias-free".into(),
            ))
        }
        (None, true) => {
            return Err(Error::InvalidArgument(
                "bias missing but bias mode requires one".into(),
            ))
        }
    }
    ensure_finite("W", &state.w)?;
    ensure_finite("H", &state.h)?;
    ensure_finite("Y", y)?;
    if let Some(b) = &state.b {
        ensure_finite_vec("b", b)?;
    }

    let kn = total as f64;
    let lambda_b = hyper.bias.lambda_b();

    let mut resid = state.w.dot(&state.h);
    if let Some(b) = &state.b {
        let b_col = b.view().insert_axis(Axis(1));
        resid += &b_col;
    }
    resid -= y;

    let mut objective = frob2(&resid) / (2.0 * kn)
        + 0.5 * hyper.lambda_w * frob2(&state.w)
        + 0.5 * hyper.lambda_h * frob2(&state.h);
    if let Some(b) = &state.b {
        objective += 0.5 * lambda_b * norm2_vec(b);
    }

    let mut gw = resid.dot(&state.h.t());
    gw.zip_mut_with(&state.w, |g, &w| *g = *g / kn + hyper.lambda_w * w);
    let mut gh = state.w.t().dot(&resid);
    gh.zip_mut_with(&state.h, |g, &h| *g = *g / kn + hyper.lambda_h * h);
    let gb = state.b.as_ref().map(|b| {
        let mut g = resid.sum_axis(Axis(1));
        g.zip_mut_with(b, |gi, &bi| *gi = *gi / kn + lambda_b * bi);
        g
    });

    Ok(EvalResult {
        objective,
        grad: ModelState::Plain(PlainState {
            w: gw,
            h: gh,
            b: gb,
        }),
    })
}

/// Closed-form minimizer of the plain objective over the bias alone:
/// `b* = (1/N)(Y − WH)·1_N`.
pub fn optimal_bias(w: &Mat, h: &Mat, y: &Mat, dims: &ProblemDims) -> Result<Array1<f64>> {
    let total = dims.total();
    if w.dim() != (dims.k, dims.d) {
        return Err(Error::shape("W", (dims.k, dims.d), w.dim()));
    }
    if h.dim() != (dims.d, total) {
        return Err(Error::shape("H", (dims.d, total), h.dim()));
    }
    if y.dim() != (dims.k, total) {
        return Err(Error::shape("Y", (dims.k, total), y.dim()));
    }
    let mut diff = w.dot(h);
    diff.zip_mut_with(y, |a, &b| *a = b - *a);
    Ok(diff.sum_axis(Axis(1)) / total as f64)
}

/// Evaluates the two-layer objective and its exact gradients. With
/// `R := (1/(Kn))(W₂·A − Y)`, `A = a(W₁H₁)`, and the ReLU mask
/// `D = 1[W₁H₁ > 0]` (all ones for linear):
/// `∂W₂ = R·A^T + λ_{W₂}W₂`, `∂W₁ = (W₂^T R ⊙ D)·H₁^T + λ_{W₁}W₁`,
/// `∂H₁ = W₁^T(W₂^T R ⊙ D) + λ_{H₁}H₁`. The ReLU subgradient at exactly
/// zero is taken as zero.
pub fn eval_two_layer(
    state: &TwoLayerState,
    y: &Mat,
    dims: &ProblemDims,
    hyper: &TwoLayerHyper,
) -> Result<EvalResult> {
    let total = dims.total();
    if state.w2.dim() != (dims.k, dims.d) {
        return Err(Error::shape("W2", (dims.k, dims.d), state.w2.dim()));
    }
    if state.w1.dim() != (dims.d, dims.d) {
        return Err(Error::shape("W1", (dims.d, dims.d), state.w1.dim()));
    }
    if state.h1.dim() != (dims.d, total) {
        return Err(Error::shape("H1", (dims.d, total), state.h1.dim()));
    }
    if y.dim() != (dims.k, total) {
        return Err(Error::shape("Y", (dims.k, total), y.dim()));
    }
    ensure_finite("W2", &state.w2)?;
    ensure_finite("W1", &state.w1)?;
    ensure_finite("H1", &state.h1)?;
    ensure_finite("Y", y)?;

    let kn = total as f64;
    let pre = state.w1.dot(&state.h1);
    let a = match state.activation {
        Activation::Linear => pre.clone(),
        Activation::Relu => pre.mapv(|x| x.max(0.0)),
    };

    let mut r = state.w2.dot(&a);
    r -= y;
    let data = frob2(&r) / (2.0 * kn);
    r.mapv_inplace(|x| x / kn);

    let objective = data
        + 0.5 * hyper.lambda_w2 * frob2(&state.w2)
        + 0.5 * hyper.lambda_w1 * frob2(&state.w1)
        + 0.5 * hyper.lambda_h1 * frob2(&state.h1);

    let mut gw2 = r.dot(&a.t());
    gw2.zip_mut_with(&state.w2, |g, &w| *g += hyper.lambda_w2 * w);

    let mut back = state.w2.t().dot(&r);
    if state.activation == Activation::Relu {
        back.zip_mut_with(&pre, |u, &p| {
            if p <= 0.0 {
                *u = 0.0;
            }
        });
    }
    let mut gw1 = back.dot(&state.h1.t());
    gw1.zip_mut_with(&state.w1, |g, &w| *g += hyper.lambda_w1 * w);
    let mut gh1 = state.w1.t().dot(&back);
    gh1.zip_mut_with(&state.h1, |g, &h| *g += hyper.lambda_h1 * h);

    Ok(EvalResult {
        objective,
        grad: ModelState::TwoLayer(TwoLayerState {
            w2: gw2,
            w1: gw1,
            h1: gh1,
            activation: state.activation,
        }),
    })
}

/// Evaluates whichever variant `state` holds; the hyperparameter family
/// must match.
pub fn eval(
    state: &ModelState,
    y: &Mat,
    dims: &ProblemDims,
    hyper: &Hyperparams,
) -> Result<EvalResult> {
    match (state, hyper) {
        (ModelState::Plain(s), Hyperparams::Plain(h)) => eval_plain(s, y, dims, h),
        (ModelState::TwoLayer(s), Hyperparams::TwoLayer(h)) => eval_two_layer(s, y, dims, h),
        _ => Err(Error::InvalidArgument(
            "state variant does not match hyperparameter family".into(),
        )),
    }
}

/// Central finite differences `(f(x+εe) − f(x−εe))/(2ε)` per coordinate,
/// returned as a gradient bundle shaped like `state`.
pub fn finite_diff_gradient<F>(mut f: F, state: &ModelState, eps: f64) -> ModelState
where
    F: FnMut(&ModelState) -> f64,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mut x = state.clone();
    let mut grad = state.zeroed();
    for part in 0..state.num_parts() {
        for idx in 0..state.part_len(part) {
            let orig = x.part_slice_mut(part)[idx];
            x.part_slice_mut(part)[idx] = orig + eps;
            let f_plus = f(&x);
            x.part_slice_mut(part)[idx] = orig - eps;
            let f_minus = f(&x);
            x.part_slice_mut(part)[idx] = orig;
            grad.part_slice_mut(part)[idx] = (f_plus - f_minus) / (2.0 * eps);
        }
    }
    grad
}

/// Largest relative coordinate-wise gradient discrepancy
/// `|analytic − reference| / (1 + |reference|)`.
pub fn max_rel_grad_diff(analytic: &ModelState, reference: &ModelState) -> f64 {
    let mut a = analytic.clone();
    let mut r = reference.clone();
    let mut worst = 0.0_f64;
    for part in 0..a.num_parts() {
        let pa = a.part_slice_mut(part).to_vec();
        let pr = r.part_slice_mut(part).to_vec();
        for (x, y) in pa.iter().zip(pr.iter()) {
            worst = worst.max((x - y).abs() / (1.0 + y.abs()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::build_label_matrix;
    use crate::optim::{init_state, InitSpec};

    fn small_dims() -> ProblemDims {
        ProblemDims::new(3, 5, 2).unwrap()
    }

    fn plain_hyper(bias: BiasMode) -> PlainHyper {
        PlainHyper {
            lambda_w: 0.01,
            lambda_h: 0.02,
            bias,
        }
    }

    #[test]
    fn zero_state_objective_is_one_half() {
        // (1/(2Kn))‖Y‖² = N/(2N) = 1/2 regardless of dimensions.
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let state = ModelState::zeros_plain(&dims, false);
        let ModelState::Plain(s) = &state else { unreachable!() };
        let r = eval_plain(s, &y, &dims, &plain_hyper(BiasMode::BiasFree)).unwrap();
        assert_eq!(r.objective, 0.5);

        let two = ModelState::zeros_two_layer(&dims, Activation::Relu);
        let ModelState::TwoLayer(t) = &two else { unreachable!() };
        let hyper = TwoLayerHyper {
            lambda_w2: 0.01,
            lambda_w1: 0.01,
            lambda_h1: 0.01,
        };
        assert_eq!(eval_two_layer(t, &y, &dims, &hyper).unwrap().objective, 0.5);
    }

    #[test]
    fn bias_presence_must_match_mode() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let no_bias = ModelState::zeros_plain(&dims, false);
        let ModelState::Plain(s) = &no_bias else { unreachable!() };
        assert!(eval_plain(s, &y, &dims, &plain_hyper(BiasMode::Unregularized)).is_err());
        let with_bias = ModelState::zeros_plain(&dims, true);
        let ModelState::Plain(s) = &with_bias else { unreachable!() };
        assert!(eval_plain(s, &y, &dims, &plain_hyper(BiasMode::BiasFree)).is_err());
    }

    #[test]
    fn plain_gradients_match_finite_differences() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        for (variant, bias) in [
            (Variant::PlainBiasFree, BiasMode::BiasFree),
            (Variant::PlainUnregBias, BiasMode::Unregularized),
            (Variant::PlainRegBias, BiasMode::Regularized(0.05)),
        ] {
            let hyper = Hyperparams::Plain(plain_hyper(bias));
            let state = init_state(variant, &dims, &InitSpec { scale: 1.0, seed: 11 }).unwrap();
            let analytic = eval(&state, &y, &dims, &hyper).unwrap().grad;
            let fd = finite_diff_gradient(
                |s| eval(s, &y, &dims, &hyper).unwrap().objective,
                &state,
                1e-6,
            );
            assert!(
                max_rel_grad_diff(&analytic, &fd) <= 1e-6,
                "variant {variant:?}"
            );
        }
    }

    #[test]
    fn two_layer_gradients_match_finite_differences() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let hyper = Hyperparams::TwoLayer(TwoLayerHyper {
            lambda_w2: 0.01,
            lambda_w1: 0.02,
            lambda_h1: 0.03,
        });
        for variant in [Variant::TwoLayerLinear, Variant::TwoLayerRelu] {
            let mut seed = 5;
            let state = loop {
                let s = init_state(variant, &dims, &InitSpec { scale: 1.0, seed }).unwrap();
                // Keep ReLU test points away from the kink.
                let ModelState::TwoLayer(t) = &s else { unreachable!() };
                if variant == Variant::TwoLayerLinear
                    || t.preactivation().iter().all(|x| x.abs() > 1e-6)
                {
                    break s;
                }
                seed += 1;
            };
            let analytic = eval(&state, &y, &dims, &hyper).unwrap().grad;
            let fd = finite_diff_gradient(
                |s| eval(s, &y, &dims, &hyper).unwrap().objective,
                &state,
                1e-6,
            );
            assert!(
                max_rel_grad_diff(&analytic, &fd) <= 1e-6,
                "variant {variant:?}"
            );
        }
    }

    #[test]
    fn optimal_bias_examples() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let w0 = Mat::zeros((dims.k, dims.d));
        let h0 = Mat::zeros((dims.d, dims.total()));
        // W = H = 0: b* = (1/K)·1.
        let b = optimal_bias(&w0, &h0, &y, &dims).unwrap();
        for &bi in b.iter() {
            assert!((bi - 1.0 / dims.k as f64).abs() <= 1e-15);
        }
        // WH = Y exactly: b* = 0. Use W = [I; 0]^T-shaped pair to hit Y.
        let mut w = Mat::zeros((dims.k, dims.d));
        for k in 0..dims.k {
            w[[k, k]] = 1.0;
        }
        let mut h = Mat::zeros((dims.d, dims.total()));
        for k in 0..dims.k {
            for i in 0..dims.n {
                h[[k, k * dims.n + i]] = 1.0;
            }
        }
        let b = optimal_bias(&w, &h, &y, &dims).unwrap();
        assert!(b.iter().all(|x| x.abs() <= 1e-15));
    }

    #[test]
    fn optimal_bias_zeroes_bias_gradient() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let state = init_state(
            Variant::PlainUnregBias,
            &dims,
            &InitSpec { scale: 1.0, seed: 3 },
        )
        .unwrap();
        let ModelState::Plain(mut s) = state else { unreachable!() };
        s.b = Some(optimal_bias(&s.w, &s.h, &y, &dims).unwrap());
        let r = eval_plain(&s, &y, &dims, &plain_hyper(BiasMode::Unregularized)).unwrap();
        let ModelState::Plain(g) = &r.grad else { unreachable!() };
        let gb = g.b.as_ref().unwrap();
        assert!(norm2_vec(gb).sqrt() <= 1e-12);
    }

    #[test]
    fn optimal_bias_is_a_minimizer_over_bias() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let hyper = plain_hyper(BiasMode::Unregularized);
        let state = init_state(
            Variant::PlainUnregBias,
            &dims,
            &InitSpec { scale: 1.0, seed: 17 },
        )
        .unwrap();
        let ModelState::Plain(mut s) = state else { unreachable!() };
        s.b = Some(optimal_bias(&s.w, &s.h, &y, &dims).unwrap());
        let best = eval_plain(&s, &y, &dims, &hyper).unwrap().objective;
        for seed in 0..5 {
            let noise = init_state(
                Variant::PlainUnregBias,
                &dims,
                &InitSpec { scale: 1.0, seed },
            )
            .unwrap();
            let ModelState::Plain(n) = noise else { unreachable!() };
            let mut other = s.clone();
            other.b = n.b;
            let obj = eval_plain(&other, &y, &dims, &hyper).unwrap().objective;
            assert!(best <= obj + 1e-15);
        }
    }

    #[test]
    fn bias_free_equals_regularized_at_zero_bias() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        let free = init_state(
            Variant::PlainBiasFree,
            &dims,
            &InitSpec { scale: 0.7, seed: 23 },
        )
        .unwrap();
        let ModelState::Plain(f) = &free else { unreachable!() };
        let with_zero_bias = PlainState {
            w: f.w.clone(),
            h: f.h.clone(),
            b: Some(Array1::zeros(dims.k)),
        };
        let r_free = eval_plain(f, &y, &dims, &plain_hyper(BiasMode::BiasFree)).unwrap();
        let r_reg = eval_plain(
            &with_zero_bias,
            &y,
            &dims,
            &plain_hyper(BiasMode::Regularized(0.4)),
        )
        .unwrap();
        assert_eq!(r_free.objective, r_reg.objective);
        let ModelState::Plain(gf) = &r_free.grad else { unreachable!() };
        let ModelState::Plain(gr) = &r_reg.grad else { unreachable!() };
        assert_eq!(gf.w, gr.w);
        assert_eq!(gf.h, gr.h);
    }

    #[test]
    fn relu_mask_zeroes_backprop_on_nonpositive_entries() {
        let dims = ProblemDims::new(2, 2, 1).unwrap();
        let y = build_label_matrix(&dims);
        // W1H1 has one negative column, so its H1 gradient column comes
        // only from the penalty term.
        let state = TwoLayerState {
            w2: Mat::eye(2),
            w1: Mat::eye(2),
            h1: ndarray::array![[1.0, -1.0], [1.0, -1.0]],
            activation: Activation::Relu,
        };
        let hyper = TwoLayerHyper {
            lambda_w2: 0.0,
            lambda_w1: 0.0,
            lambda_h1: 0.5,
        };
        let r = eval_two_layer(&state, &y, &dims, &hyper).unwrap();
        let ModelState::TwoLayer(g) = &r.grad else { unreachable!() };
        assert_eq!(g.h1[[0, 1]], -0.5);
        assert_eq!(g.h1[[1, 1]], -0.5);
    }

    #[test]
    fn finite_diff_on_simple_objectives() {
        let dims = small_dims();
        let state = init_state(
            Variant::PlainBiasFree,
            &dims,
            &InitSpec { scale: 0.1, seed: 2 },
        )
        .unwrap();
        // Quadratic ‖x‖²/2 has gradient x.
        let quad = finite_diff_gradient(|s| 0.5 * s.norm() * s.norm(), &state, 1e-6);
        assert!(max_rel_grad_diff(&quad, &state) <= 1e-9);
        // Constant objective has zero gradient.
        let zero = finite_diff_gradient(|_| 3.25, &state, 1e-6);
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn objective_is_nonnegative_on_random_states() {
        let dims = small_dims();
        let y = build_label_matrix(&dims);
        for seed in 0..10 {
            let hyper = Hyperparams::Plain(plain_hyper(BiasMode::Regularized(0.1)));
            let state = init_state(
                Variant::PlainRegBias,
                &dims,
                &InitSpec { scale: 2.0, seed },
            )
            .unwrap();
            assert!(eval(&state, &y, &dims, &hyper).unwrap().objective >= 0.0);
        }
    }
}
