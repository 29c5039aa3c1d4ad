//! Deterministic full-batch gradient descent with seeded Gaussian
//! initialization, a fixed logging cadence, gradient-norm stopping, and a
//! multi-seed retry driver for the two-layer variants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::metrics::{nc_report, NcReport};
use crate::model::{eval, Hyperparams, ModelState, PlainState, TwoLayerState, Variant};

/// Objective level beyond which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 200_000;
/// Default metric logging cadence.
pub const DEFAULT_LOG_EVERY: usize = 5_000;
/// Default gradient-norm stopping tolerance.
pub const DEFAULT_GRAD_TOL: f64 = 1e-10;
/// Default gradient-descent step size.
pub const DEFAULT_STEP_SIZE: f64 = 0.1;
/// Default number of seeds tried by [`descend_multi_seed`].
pub const DEFAULT_MULTI_SEED_ATTEMPTS: u64 = 3;

/// Default initialization scale: unit for the plain model, 0.1 for the
/// two-layer variants, whose landscape is harder to descend from large
/// starts.
pub fn default_init_scale(variant: Variant) -> f64 {
    if variant.is_two_layer() {
        0.1
    } else {
        1.0
    }
}

/// Seeded standard-normal initialization scaled by `scale`.
#[derive(Clone, Copy, Debug)]
pub struct InitSpec {
    pub scale: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scale > 0.0 && self.scale.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "initialization scale must be positive and finite".into(),
            ))
        }
    }
}

/// Gradient-descent schedule.
#[derive(Clone, Copy, Debug)]
pub struct OptimConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub log_every: usize,
    pub grad_tol: f64,
    pub init: InitSpec,
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument(
                "step size must be positive and finite".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be positive".into(),
            ));
        }
        if self.log_every == 0 || self.log_every > self.max_iters {
            return Err(Error::InvalidArgument(
                "log_every must satisfy 1 <= log_every <= max_iters".into(),
            ));
        }
        if self.grad_tol.is_nan() || self.grad_tol < 0.0 {
            return Err(Error::InvalidArgument(
                "grad_tol must be nonnegative".into(),
            ));
        }
        self.init.validate()
    }
}

/// One logged optimization snapshot.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub report: NcReport,
}

/// Ordered log of snapshots; iterations are strictly increasing and every
/// objective is finite.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

fn sample_matrix<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect();
    Mat::from_shape_vec((rows, cols), data).expect("shape matches data length")
}

/// Draws a fresh state with i.i.d. `Normal(0, scale²)` entries from a
/// ChaCha8 stream seeded by `init.seed`. Parts are filled row-major in a
/// fixed order: `W, H, b` for plain variants, `W2, W1, H1` for two-layer.
pub fn init_state(variant: Variant, dims: &ProblemDims, init: &InitSpec) -> Result<ModelState> {
    dims.validate()?;
    init.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let total = dims.total();
    Ok(if variant.is_two_layer() {
        let w2 = sample_matrix(&mut rng, dims.k, dims.d, init.scale);
        let w1 = sample_matrix(&mut rng, dims.d, dims.d, init.scale);
        let h1 = sample_matrix(&mut rng, dims.d, total, init.scale);
        ModelState::TwoLayer(TwoLayerState {
            w2,
            w1,
            h1,
            activation: variant.activation().expect("two-layer variant"),
        })
    } else {
        let w = sample_matrix(&mut rng, dims.k, dims.d, init.scale);
        let h = sample_matrix(&mut rng, dims.d, total, init.scale);
        let b = variant.has_bias().then(|| {
            let data: Vec<f64> = (0..dims.k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * init.scale
                })
                .collect();
            ndarray::Array1::from_vec(data)
        });
        ModelState::Plain(PlainState { w, h, b })
    })
}

/// Runs plain gradient descent `x ← x − step·∇f(x)` from `state`,
/// logging the objective, gradient norm, and metric report every
/// `log_every` iterations and at the final iterate. Stops when the
/// gradient norm falls to `grad_tol` or `max_iters` updates have been
/// applied. A logged objective above the previously logged one only emits
/// a warning; divergence (non-finite objective or above
/// [`DIVERGENCE_THRESHOLD`]) aborts with an error.
pub fn gradient_descent(
    mut state: ModelState,
    y: &Mat,
    dims: &ProblemDims,
    hyper: &Hyperparams,
    variant: Variant,
    cfg: &OptimConfig,
) -> Result<(ModelState, Trace)> {
    cfg.validate()?;
    hyper.validate()?;
    state.check_shapes(dims)?;
    if variant.is_two_layer() != matches!(state, ModelState::TwoLayer(_)) {
        return Err(Error::InvalidArgument(
            "state does not match the requested variant".into(),
        ));
    }

    let mut trace = Trace::default();
    let mut last_logged: Option<f64> = None;
    let mut t = 0usize;
    loop {
        let res = eval(&state, y, dims, hyper)?;
        if !res.objective.is_finite() || res.objective > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence {
                iteration: t,
                objective: res.objective,
                threshold: DIVERGENCE_THRESHOLD,
            });
        }
        let grad_norm = res.grad_norm();
        let stop = grad_norm <= cfg.grad_tol || t >= cfg.max_iters;
        if t.is_multiple_of(cfg.log_every) || stop {
            if let Some(prev) = last_logged {
                if res.objective > prev {
                    log::warn!(
                        "objective increased between logged iterations: {prev:.6e} -> {:.6e} at iteration {t}",
                        res.objective
                    );
                }
            }
            trace.rows.push(TraceRow {
                iteration: t,
                objective: res.objective,
                grad_norm,
                report: nc_report(&state, dims, false)?,
            });
            last_logged = Some(res.objective);
        }
        if stop {
            break;
        }
        state.scaled_add(-cfg.step_size, &res.grad);
        t += 1;
    }
    Ok((state, trace))
}

/// A completed run together with the seed that produced it.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: ModelState,
    pub trace: Trace,
    pub seed: u64,
}

impl RunOutcome {
    pub fn final_objective(&self) -> f64 {
        self.trace
            .final_row()
            .map(|r| r.objective)
            .unwrap_or(f64::INFINITY)
    }
}

/// Runs gradient descent from up to `attempts` seeds (`init.seed`,
/// `init.seed + 1`, …), returning the first run `accept` approves, or
/// otherwise the completed run with the lowest final objective. Divergent
/// attempts are skipped; the last divergence error propagates only when
/// every attempt diverges.
pub fn descend_multi_seed<F>(
    variant: Variant,
    y: &Mat,
    dims: &ProblemDims,
    hyper: &Hyperparams,
    cfg: &OptimConfig,
    attempts: u64,
    accept: F,
) -> Result<RunOutcome>
where
    F: Fn(&RunOutcome) -> bool,
{
    if attempts == 0 {
        return Err(Error::InvalidArgument(
            "multi-seed descent needs at least one attempt".into(),
        ));
    }
    let mut best: Option<RunOutcome> = None;
    let mut last_err: Option<Error> = None;
    for i in 0..attempts {
        let seed = cfg.init.seed.wrapping_add(i);
        let attempt_cfg = OptimConfig {
            init: InitSpec {
                scale: cfg.init.scale,
                seed,
            },
            ..*cfg
        };
        let state0 = init_state(variant, dims, &attempt_cfg.init)?;
        match gradient_descent(state0, y, dims, hyper, variant, &attempt_cfg) {
            Ok((state, trace)) => {
                let outcome = RunOutcome { state, trace, seed };
                if accept(&outcome) {
                    return Ok(outcome);
                }
                let better = best
                    .as_ref()
                    .is_none_or(|b| outcome.final_objective() < b.final_objective());
                if better {
                    best = Some(outcome);
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                log::warn!("seed {seed} diverged: {e}");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.expect("no outcome implies at least one error"))
}
