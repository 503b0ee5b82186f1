//! Experiment configuration: the JSON schema and its validation into a run plan.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scenery_core::functional::ScalingMode;
use scenery_core::gaussian_field::{default_spacing, FeatureSampler, MIN_FEATURES};
use scenery_core::spectra::{build_gaussian_model, shot_noise_model, CovarianceModel, CovarianceSpec, ShapeFunction, ShapeSpec};
use scenery_core::stats::FiniteDimProbe;

use crate::error::{config_error, io_error, json_error, Result};
use crate::io::read_tabulated_model;

pub const DEFAULT_KAPPA: f64 = 10.0;
pub const DEFAULT_GRID_STEPS: usize = 64;
pub const DEFAULT_FEATURES: usize = 4096;
pub const DEFAULT_LIMIT_REPLICAS: usize = 20_000;

/// The scenery to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Gaussian field with a parametric or inline tabulated covariance.
    Gaussian(CovarianceSpec),
    /// Gaussian field with an isotropic covariance read from a CSV of `(x, R)` rows.
    GaussianTable { dim: usize, path: PathBuf },
    /// Shot noise over a unit-intensity Poisson point set.
    Poisson(ShapeSpec),
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(spec) => spec.dim(),
            Self::GaussianTable { dim, .. } => *dim,
            Self::Poisson(shape) => shape.dim,
        }
    }
}

/// How Gaussian sceneries are synthesised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Circulant embedding on a grid around each path.
    #[default]
    Grid,
    /// Random Fourier features, mesh-free and approximately Gaussian.
    Features,
}

/// Normalisation applied instead of the theoretical `a(n)`, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingOverride {
    SqrtN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGridSpec {
    /// Uniform grid `k / steps`, `k = 0..=steps`.
    Steps(usize),
    Points(Vec<f64>),
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        Self::Steps(DEFAULT_GRID_STEPS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            times: vec![0.5, 1.0],
            weights: vec![1.0, 0.5],
        }
    }
}

/// Path-conditional statistics computed on their own, usually smaller, ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    pub n_ladder: Vec<u64>,
    pub replicas: usize,
    #[serde(default = "default_windows")]
    pub windows: [(f64, f64); 2],
    /// Also compute the full conditional variance `V_n(1)` (expensive).
    #[serde(default)]
    pub variance: bool,
}

fn default_windows() -> [(f64, f64); 2] {
    [(0.0, 0.5), (0.5, 1.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SuiteName {
    Variance,
    Ecf,
    Normality,
    Kurtosis,
    MomentScaling,
    CrossTerms,
    Concentration,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Variance => "variance",
            Self::Ecf => "ecf",
            Self::Normality => "normality",
            Self::Kurtosis => "kurtosis",
            Self::MomentScaling => "moment_scaling",
            Self::CrossTerms => "cross_terms",
            Self::Concentration => "concentration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub potential: PotentialSpec,
    #[serde(default = "nondegenerate")]
    pub mode: ScalingMode,
    pub n_ladder: Vec<u64>,
    #[serde(default)]
    pub t_grid: TimeGridSpec,
    pub replicas: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub suites: Vec<SuiteName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default = "default_features")]
    pub features: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_override: Option<ScalingOverride>,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<ConditionalSpec>,
    /// Local-time paths behind the one-dimensional limit law.
    #[serde(default = "default_limit_replicas")]
    pub limit_replicas: usize,
    /// Replicas of the largest `n` whose path and scenery are dumped to CSV.
    #[serde(default)]
    pub dumps: usize,
}

fn nondegenerate() -> ScalingMode {
    ScalingMode::Nondegenerate
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_features() -> usize {
    DEFAULT_FEATURES
}

fn default_limit_replicas() -> usize {
    DEFAULT_LIMIT_REPLICAS
}

/// The sampler behind each replica's scenery.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Scenery {
    GaussianGrid { model: CovarianceModel, spacing: f64 },
    GaussianFeatures { sampler: FeatureSampler, features: usize },
    Poisson { shape: ShapeFunction },
}

/// A validated configuration with every model built.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub config: ExperimentConfig,
    pub model: CovarianceModel,
    pub scenery: Scenery,
    pub times: Vec<f64>,
    pub probe: FiniteDimProbe,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        serde_json::from_str(&text).map_err(json_error(path))
    }

    /// Replaces table references by inline specs so the config stands alone.
    pub fn resolve_tables(mut self, base: &Path) -> Result<Self> {
        if let PotentialSpec::GaussianTable { dim, path } = &self.potential {
            let full = if path.is_absolute() { path.clone() } else { base.join(path) };
            self.potential = PotentialSpec::Gaussian(read_tabulated_model(&full, *dim)?);
        }
        Ok(self)
    }

    pub fn time_grid(&self) -> Result<Vec<f64>> {
        let times = match &self.t_grid {
            TimeGridSpec::Steps(0) => return Err(config_error("t_grid needs at least one step")),
            TimeGridSpec::Steps(k) => (0..=*k).map(|i| i as f64 / *k as f64).collect(),
            TimeGridSpec::Points(p) => p.clone(),
        };
        if times.is_empty() || times.iter().any(|t| !(0.0..=1.0).contains(t)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("t_grid must be strictly increasing inside [0, 1]"));
        }
        if times[times.len() - 1] != 1.0 {
            return Err(config_error("t_grid must end at 1"));
        }
        Ok(times)
    }

    /// The normalisation written to the trajectories.
    pub fn applied_scaling(&self, n: u64) -> Result<f64> {
        Ok(match self.scaling_override {
            Some(ScalingOverride::SqrtN) => (n as f64).sqrt(),
            None => scenery_core::functional::scaling_factor(n as f64, self.dim, self.mode)?,
        })
    }

    /// Checks the schema-level rules and builds the models.
    pub fn plan(&self) -> Result<RunPlan> {
        scenery_core::geometry::check_dim(self.dim)?;
        if self.potential.dim() != self.dim {
            return Err(config_error(format!(
                "potential has dimension {} but the experiment has {}",
                self.potential.dim(),
                self.dim
            )));
        }
        check_ladder(&self.n_ladder, "n_ladder")?;
        if self.replicas == 0 {
            return Err(config_error("replicas must be positive"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(config_error("kappa must be positive"));
        }
        let times = self.time_grid()?;
        let probe = FiniteDimProbe::new(self.probe.times.clone(), self.probe.weights.clone())
            .map_err(|e| config_error(format!("probe: {e}")))?;
        for t in probe.times() {
            if !times.iter().any(|g| (g - t).abs() <= 1e-12) {
                return Err(config_error(format!("probe time {t} is not on t_grid")));
            }
        }
        if let Some(cond) = &self.conditional {
            check_ladder(&cond.n_ladder, "conditional.n_ladder")?;
            if cond.replicas < 2 {
                return Err(config_error("conditional.replicas must be at least 2"));
            }
            let [a, b] = cond.windows;
            if !(0.0 <= a.0 && a.0 < a.1 && a.1 <= 1.0 && 0.0 <= b.0 && b.0 < b.1 && b.1 <= 1.0) {
                return Err(config_error("conditional windows must be subintervals of [0, 1]"));
            }
            if a.0 < b.1 && b.0 < a.1 {
                return Err(config_error("conditional windows must be disjoint"));
            }
        }
        let (model, scenery) = match &self.potential {
            PotentialSpec::Gaussian(spec) => {
                let model = build_gaussian_model(spec)?;
                let scenery = match self.sampler {
                    SamplerKind::Grid => Scenery::GaussianGrid { spacing: default_spacing(&model), model: model.clone() },
                    SamplerKind::Features => {
                        if self.features < MIN_FEATURES {
                            return Err(config_error(format!("features must be at least {MIN_FEATURES}")));
                        }
                        Scenery::GaussianFeatures { sampler: FeatureSampler::new(&model)?, features: self.features }
                    }
                };
                (model, scenery)
            }
            PotentialSpec::GaussianTable { .. } => {
                return Err(config_error("tabulated models must be resolved before planning"));
            }
            PotentialSpec::Poisson(spec) => {
                let shape = ShapeFunction::new(spec.clone())?;
                (shot_noise_model(&shape)?, Scenery::Poisson { shape })
            }
        };
        match self.mode {
            ScalingMode::Degenerate if self.dim >= 3 => {
                return Err(config_error("the degenerate mode exists only for d = 1, 2"));
            }
            ScalingMode::Degenerate if !model.is_degenerate() => {
                return Err(config_error(format!(
                    "mode is degenerate but R^(0) = {:e} is not zero",
                    model.r_hat_zero()
                )));
            }
            ScalingMode::Nondegenerate if self.dim <= 2 && model.is_degenerate() => {
                return Err(config_error("R^(0) = 0 needs the degenerate mode in d = 1, 2"));
            }
            _ => {}
        }
        Ok(RunPlan {
            config: self.clone(),
            model,
            scenery,
            times,
            probe,
        })
    }
}

fn check_ladder(ladder: &[u64], what: &str) -> Result<()> {
    if ladder.is_empty() || ladder.iter().any(|n| *n < 2) || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_error(format!("{what} must be strictly increasing values of at least 2")));
    }
    Ok(())
}

impl RunPlan {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn mode(&self) -> ScalingMode {
        self.config.mode
    }

    /// Support radius driving the time step `(radius / kappa)^2`.
    pub fn correlation_length(&self) -> f64 {
        self.model.support_radius()
    }

    /// One-dimensional nondegenerate runs converge to the local-time mixture.
    pub fn has_mixture_limit(&self) -> bool {
        self.dim() == 1 && self.mode() == ScalingMode::Nondegenerate
    }

    pub fn largest_n(&self) -> u64 {
        *self.config.n_ladder.last().expect("validated ladder is nonempty")
    }
}
