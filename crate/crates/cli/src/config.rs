//! Experiment configuration files.
//!
//! Configs are JSON objects; unknown keys are rejected and every field is
//! checked against the invoked command before any computation starts.

use std::fs;
use std::path::{Path, PathBuf};

use krmap::approx::ApproxConfig;
use krmap::density::{Density, DensitySpec};
use krmap::indexsets::WeightVector;
use krmap::metrics::DistanceOptions;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must name the invoked command
    /// (e.g. `"study convergence"`).
    pub command: Option<String>,
    /// Defaults to the uniform density in the target's dimension.
    pub reference: Option<DensitySpec>,
    pub target: Option<DensitySpec>,
    /// Second density for `distance`; without it the map pullback is
    /// compared with the target.
    pub compare: Option<DensitySpec>,
    pub xi: Option<XiSpec>,
    pub epsilon: Option<f64>,
    pub epsilon_list: Option<Vec<f64>>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub approx: ApproxConfig,
    pub samples: Option<usize>,
    /// Points of the seeded cloud used for sup-norm estimates.
    pub cloud_size: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// CSV of evaluation points (`transport eval`).
    pub points: Option<PathBuf>,
    /// A serialized approximate transport to use instead of fitting one.
    pub map: Option<PathBuf>,
    pub truncation: Option<TruncationSpec>,
    #[serde(default)]
    pub record_timing: bool,
    /// Base name of the files written to the output directory.
    pub output_name: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes for conditional CDFs of non-affine slices.
    pub cdf_order: Option<usize>,
    /// Per-dimension order for marginals of quadrature-based densities.
    pub marginal_order: Option<usize>,
    /// Per-dimension order of the distance grid.
    pub distance_order: Option<usize>,
    pub oversample_tv: Option<bool>,
    /// Skip distances in studies when `false`.
    pub distances: Option<bool>,
}

/// Either explicit weights or `ξ_j = 1 + α/b_j`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    Values(Vec<f64>),
    Recipe(XiRecipe),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiRecipe {
    /// `b_j`; defaults to the target's own anisotropy.
    pub anisotropy: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Alpha,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Value(f64),
    /// `"holomorphy"`: the target's holomorphy margin (linear family only).
    Rule(String),
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::Value(1.0)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub amplitude: f64,
    pub decay: f64,
    pub d_max: usize,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

/// The commands a config can drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    TransportEval,
    ApproxBuild,
    Distance,
    Sample,
    StudyConvergence,
    StudyTruncation,
    StudyPosterior,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::TransportEval => "transport eval",
            CommandKind::ApproxBuild => "approx build",
            CommandKind::Distance => "distance",
            CommandKind::Sample => "sample",
            CommandKind::StudyConvergence => "study convergence",
            CommandKind::StudyTruncation => "study truncation",
            CommandKind::StudyPosterior => "study posterior",
        }
    }

    pub fn default_output(self) -> &'static str {
        match self {
            CommandKind::TransportEval => "transport",
            CommandKind::ApproxBuild => "approx",
            CommandKind::Distance => "distance",
            CommandKind::Sample => "samples",
            CommandKind::StudyConvergence => "convergence",
            CommandKind::StudyTruncation => "truncation",
            CommandKind::StudyPosterior => "posterior",
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads and parses `path`; relative paths inside the config are
    /// resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.points, &mut cfg.map].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks everything the command needs, without computing anything.
    pub fn validate(&self, cmd: CommandKind) -> Result<(), CliError> {
        if let Some(c) = &self.command {
            if c != cmd.name() {
                return Err(config_err(format!("config is for '{c}' but '{}' was invoked", cmd.name())));
            }
        }
        if let Some(name) = &self.output_name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(config_err("output_name must be a plain file stem"));
            }
        }
        if self.threads == Some(0) {
            return Err(config_err("threads must be positive"));
        }
        if let Some(eps) = self.epsilon {
            check_epsilon(eps)?;
        }
        if let Some(list) = &self.epsilon_list {
            if list.is_empty() {
                return Err(config_err("epsilon_list is empty"));
            }
            list.iter().try_for_each(|&e| check_epsilon(e))?;
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(config_err("epsilon_list must be strictly decreasing"));
            }
        }
        let needs_target = !matches!(cmd, CommandKind::StudyTruncation);
        if needs_target && self.target.is_none() {
            return Err(config_err(format!("'{}' requires a target density", cmd.name())));
        }
        if let (Some(r), Some(t)) = (&self.reference, &self.target) {
            if r.dim() != t.dim() {
                return Err(config_err(format!("reference has dimension {} but target has {}", r.dim(), t.dim())));
            }
        }
        if let (Some(c), Some(t)) = (&self.compare, &self.target) {
            if c.dim() != t.dim() {
                return Err(config_err(format!("compare has dimension {} but target has {}", c.dim(), t.dim())));
            }
        }
        if let Some(XiSpec::Values(v)) = &self.xi {
            if let Some(t) = &self.target {
                if v.len() != t.dim() {
                    return Err(config_err(format!("xi has {} entries for a {}-dimensional target", v.len(), t.dim())));
                }
            }
        }
        match cmd {
            CommandKind::TransportEval => {
                if self.points.is_none() {
                    return Err(config_err("'transport eval' requires 'points'"));
                }
            }
            CommandKind::ApproxBuild => {
                if self.epsilon.is_none() {
                    return Err(config_err("'approx build' requires 'epsilon'"));
                }
            }
            CommandKind::Sample => {
                if self.samples.is_none() {
                    return Err(config_err("'sample' requires 'samples'"));
                }
            }
            CommandKind::StudyConvergence => {
                if self.epsilon_list.is_none() {
                    return Err(config_err("'study convergence' requires 'epsilon_list'"));
                }
            }
            CommandKind::StudyTruncation => {
                if self.truncation.is_none() || self.epsilon_list.is_none() {
                    return Err(config_err("'study truncation' requires 'truncation' and 'epsilon_list'"));
                }
            }
            CommandKind::StudyPosterior => {
                if self.epsilon.is_none() || self.samples.is_none() {
                    return Err(config_err("'study posterior' requires 'epsilon' and 'samples'"));
                }
            }
            CommandKind::Distance => {}
        }
        Ok(())
    }

    fn build_density(&self, spec: &DensitySpec) -> Result<Density<f64>, CliError> {
        let d = spec.build::<f64>()?;
        Ok(match self.quadrature.marginal_order {
            Some(n) => d.with_marginal_order(n),
            None => d,
        })
    }

    pub fn target(&self) -> Result<Density<f64>, CliError> {
        let spec = self.target.as_ref().ok_or_else(|| config_err("missing target density"))?;
        self.build_density(spec)
    }

    pub fn compare(&self) -> Result<Option<Density<f64>>, CliError> {
        self.compare.as_ref().map(|spec| self.build_density(spec)).transpose()
    }

    pub fn reference(&self, dim: usize) -> Result<Density<f64>, CliError> {
        match &self.reference {
            Some(spec) => self.build_density(spec),
            None => Ok(Density::uniform(dim)),
        }
    }

    pub fn xi(&self, target: &Density<f64>) -> Result<WeightVector<f64>, CliError> {
        let recipe = match &self.xi {
            Some(XiSpec::Values(v)) => return Ok(WeightVector::new(v.clone())?),
            Some(XiSpec::Recipe(r)) => r.clone(),
            None => XiRecipe { anisotropy: None, alpha: Alpha::default() },
        };
        let alpha = match &recipe.alpha {
            Alpha::Value(a) => *a,
            Alpha::Rule(r) if r == "holomorphy" => target
                .holomorphy_alpha()
                .ok_or_else(|| config_err(format!("alpha \"holomorphy\" is not available for the {} family", target.family_name())))?,
            Alpha::Rule(r) => return Err(config_err(format!("unknown alpha rule '{r}'"))),
        };
        let b = match recipe.anisotropy {
            Some(b) => b,
            None => target
                .anisotropy()
                .ok_or_else(|| config_err("target has no anisotropy; give xi explicitly"))?
                .to_vec(),
        };
        if b.len() != target.dim() {
            return Err(config_err(format!("anisotropy has {} entries for a {}-dimensional target", b.len(), target.dim())));
        }
        Ok(WeightVector::from_anisotropy(&b, alpha)?)
    }

    pub fn distance_options(&self) -> DistanceOptions {
        DistanceOptions { order: self.quadrature.distance_order, oversample_tv: self.quadrature.oversample_tv }
    }

    pub fn output_name(&self, cmd: CommandKind) -> String {
        self.output_name.clone().unwrap_or_else(|| cmd.default_output().to_string())
    }
}

fn check_epsilon(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("epsilon must lie in (0,1), got {eps}")))
    }
}
