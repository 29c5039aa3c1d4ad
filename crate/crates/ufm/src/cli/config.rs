//! Experiment and attenuation-experiment configuration files: JSON
//! parsing, per-variant hyperparameter validation, default filling, and
//! seed resolution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::NoiseKind;
use crate::dims::ProblemDims;
use crate::error::{Error, Result};
use crate::model::{BiasMode, Hyperparams, PlainHyper, TwoLayerHyper, Variant};
use crate::optim::{
    default_init_scale, InitSpec, OptimConfig, DEFAULT_GRAD_TOL, DEFAULT_LOG_EVERY,
    DEFAULT_MAX_ITERS, DEFAULT_STEP_SIZE,
};

/// Hyperparameter fields as written in config files. Each variant
/// requires exactly its own fields; any others must be absent.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperFields {
    #[serde(rename = "lambda_W", skip_serializing_if = "Option::is_none")]
    pub lambda_w: Option<f64>,
    #[serde(rename = "lambda_H", skip_serializing_if = "Option::is_none")]
    pub lambda_h: Option<f64>,
    #[serde(rename = "lambda_b", skip_serializing_if = "Option::is_none")]
    pub lambda_b: Option<f64>,
    #[serde(rename = "lambda_W2", skip_serializing_if = "Option::is_none")]
    pub lambda_w2: Option<f64>,
    #[serde(rename = "lambda_W1", skip_serializing_if = "Option::is_none")]
    pub lambda_w1: Option<f64>,
    #[serde(rename = "lambda_H1", skip_serializing_if = "Option::is_none")]
    pub lambda_h1: Option<f64>,
}

impl HyperFields {
    pub fn from_hyper(hyper: &Hyperparams) -> Self {
        let mut fields = HyperFields::default();
        match hyper {
            Hyperparams::Plain(h) => {
                fields.lambda_w = Some(h.lambda_w);
                fields.lambda_h = Some(h.lambda_h);
                if let BiasMode::Regularized(l) = h.bias {
                    fields.lambda_b = Some(l);
                }
            }
            Hyperparams::TwoLayer(h) => {
                fields.lambda_w2 = Some(h.lambda_w2);
                fields.lambda_w1 = Some(h.lambda_w1);
                fields.lambda_h1 = Some(h.lambda_h1);
            }
        }
        fields
    }

    fn require(value: Option<f64>, name: &str, variant: Variant) -> Result<f64> {
        value.ok_or_else(|| {
            Error::Config(format!(
                "variant {} requires hyper field {name}",
                variant.name()
            ))
        })
    }

    fn forbid(value: Option<f64>, name: &str, variant: Variant) -> Result<()> {
        if value.is_some() {
            Err(Error::Config(format!(
                "variant {} does not accept hyper field {name}",
                variant.name()
            )))
        } else {
            Ok(())
        }
    }

    pub fn resolve(&self, variant: Variant) -> Result<Hyperparams> {
        let hyper = if variant.is_two_layer() {
            Self::forbid(self.lambda_w, "lambda_W", variant)?;
            Self::forbid(self.lambda_h, "lambda_H", variant)?;
            Self::forbid(self.lambda_b, "lambda_b", variant)?;
            Hyperparams::TwoLayer(TwoLayerHyper {
                lambda_w2: Self::require(self.lambda_w2, "lambda_W2", variant)?,
                lambda_w1: Self::require(self.lambda_w1, "lambda_W1", variant)?,
                lambda_h1: Self::require(self.lambda_h1, "lambda_H1", variant)?,
            })
        } else {
            Self::forbid(self.lambda_w2, "lambda_W2", variant)?;
            Self::forbid(self.lambda_w1, "lambda_W1", variant)?;
            Self::forbid(self.lambda_h1, "lambda_H1", variant)?;
            let bias = match variant {
                Variant::PlainBiasFree => {
                    Self::forbid(self.lambda_b, "lambda_b", variant)?;
                    BiasMode::BiasFree
                }
                Variant::PlainUnregBias => {
                    Self::forbid(self.lambda_b, "lambda_b", variant)?;
                    BiasMode::Unregularized
                }
                Variant::PlainRegBias => {
                    BiasMode::Regularized(Self::require(self.lambda_b, "lambda_b", variant)?)
                }
                _ => unreachable!(),
            };
            Hyperparams::Plain(PlainHyper {
                lambda_w: Self::require(self.lambda_w, "lambda_W", variant)?,
                lambda_h: Self::require(self.lambda_h, "lambda_H", variant)?,
                bias,
            })
        };
        hyper.validate()?;
        Ok(hyper)
    }
}

/// Initialization fields as written in config files. The only supported
/// distribution is `standard_normal`; scale defaults to 1.0 for plain
/// variants and 0.1 for two-layer ones; the seed defaults to the
/// experiment seed.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFields {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Optimizer fields as written in config files, all optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimFields {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitFields>,
}

/// An experiment configuration file. Optional fields take the documented
/// defaults when absent; `seed` defaults to 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub dims: ProblemDims,
    pub hyper: HyperFields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optim: Option<OptimFields>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A fully validated experiment: every default filled, every seed
/// resolved.
#[derive(Clone, Debug)]
pub struct ResolvedExperiment {
    pub variant: Variant,
    pub dims: ProblemDims,
    pub hyper: Hyperparams,
    pub optim: OptimConfig,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    /// Fills defaults and applies the command-line overrides: `--seed`
    /// replaces both the experiment seed and the initialization seed;
    /// `--out` replaces the configured output path.
    pub fn resolve(
        &self,
        seed_override: Option<u64>,
        out_override: Option<&Path>,
    ) -> Result<ResolvedExperiment> {
        self.dims.validate()?;
        let hyper = self.hyper.resolve(self.variant)?;

        let seed = seed_override.or(self.seed).unwrap_or(0);
        let optim_fields = self.optim.clone().unwrap_or_default();
        let init_fields = optim_fields.init.unwrap_or_default();
        if let Some(dist) = &init_fields.distribution {
            if dist != "standard_normal" {
                return Err(Error::Config(format!(
                    "unsupported init distribution {dist:?}; only \"standard_normal\" is available"
                )));
            }
        }
        let init = InitSpec {
            scale: init_fields
                .scale
                .unwrap_or_else(|| default_init_scale(self.variant)),
            seed: seed_override
                .or(init_fields.seed)
                .or(self.seed)
                .unwrap_or(0),
        };
        let optim = OptimConfig {
            step_size: optim_fields.step_size.unwrap_or(DEFAULT_STEP_SIZE),
            max_iters: optim_fields.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            log_every: optim_fields.log_every.unwrap_or(DEFAULT_LOG_EVERY),
            grad_tol: optim_fields.grad_tol.unwrap_or(DEFAULT_GRAD_TOL),
            init,
        };
        optim.validate()?;

        Ok(ResolvedExperiment {
            variant: self.variant,
            dims: self.dims,
            hyper,
            optim,
            output_path: out_override
                .map(Path::to_path_buf)
                .or_else(|| self.output_path.clone()),
            seed,
        })
    }
}

impl ResolvedExperiment {
    /// Echo of this experiment as a config document that reproduces it
    /// byte for byte, with every default made explicit and the
    /// initialization seed pinned to `selected_seed`.
    pub fn echo(&self, selected_seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            variant: self.variant,
            dims: self.dims,
            hyper: HyperFields::from_hyper(&self.hyper),
            optim: Some(OptimFields {
                step_size: Some(self.optim.step_size),
                max_iters: Some(self.optim.max_iters),
                log_every: Some(self.optim.log_every),
                grad_tol: Some(self.optim.grad_tol),
                init: Some(InitFields {
                    distribution: Some("standard_normal".into()),
                    scale: Some(self.optim.init.scale),
                    seed: Some(selected_seed),
                }),
            }),
            output_path: self.output_path.clone(),
            seed: Some(self.seed),
        }
    }
}

/// Base dimensions of the attenuation experiment: classes and feature
/// dimension; the per-class count is swept.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticDims {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
}

/// Configuration of the ridge attenuation experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticConfig {
    pub dims: AsymptoticDims,
    #[serde(rename = "lambda_W")]
    pub lambda_w: f64,
    #[serde(rename = "lambda_H_tilde")]
    pub lambda_h_tilde: f64,
    pub sigma_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    pub n_values: Vec<usize>,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

impl AsymptoticConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: AsymptoticConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise.unwrap_or(NoiseKind::Gaussian)
    }
}
