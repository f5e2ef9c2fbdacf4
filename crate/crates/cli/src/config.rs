//! Experiment configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use nsregret::datagen::{NoiseKind, ProfileKind};
use nsregret::MetaKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ftl,
    Ogd,
    Ons,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Glm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Logistic,
    Poisson,
    Square,
}

/// Which axis `scaling` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Horizon,
    Budget,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvatureOverrides {
    pub lipschitz: Option<f64>,
    pub lipschitz_dagger: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub strong_convexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub profile: ProfileKind,
    /// Box of the generated comparator; defaults to `bound − noise magnitude`
    /// for squared losses and `bound` for GLM losses.
    pub comparator_bound: Option<f64>,
    pub noise: NoiseKind,
    /// When set, piecewise-constant profiles use
    /// `max(1, round(s·d^{1/3}·n^{1/3}·C^{2/3}·B^{−2/3}))` jumps instead of the
    /// fixed count: each coordinate then sees the minimax-hard segment count
    /// for its share `C/d` of the budget.
    pub jumps_scale: Option<f64>,
    /// Labels from a `t,k,y` CSV instead of the generator (squared loss only).
    pub file: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            profile: ProfileKind::PiecewiseConstant { jumps: 4 },
            comparator_bound: None,
            jumps_scale: None,
            noise: NoiseKind::Uniform { sigma: 0.5 },
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlmConfig {
    pub link: LinkKind,
    /// Features are drawn with `‖v_t‖₂ ≤ radius`.
    pub radius: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        Self {
            link: LinkKind::Logistic,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write one per-round trace CSV per cell.
    pub traces: bool,
    /// Measure wall time; off by default so reruns are byte-identical.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            traces: false,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    pub meta: MetaKind,
    pub loss: LossKind,
    pub horizon: usize,
    /// Horizon grid for `scaling` with `sweep = "horizon"`.
    pub horizons: Vec<usize>,
    pub dim: usize,
    pub bound: f64,
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
    pub sweep: Sweep,
    pub meta_zeta: Option<f64>,
    pub curvature: CurvatureOverrides,
    pub data: DataConfig,
    pub glm: GlmConfig,
    pub output: OutputConfig,
    pub workers: usize,
    pub tol: f64,
    /// Replaces every run by `regret = n^p` (plumbing checks of `scaling`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_regret_exponent: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            learner: LearnerKind::Ftl,
            meta: MetaKind::Flh,
            loss: LossKind::Squared,
            horizon: 1024,
            horizons: Vec::new(),
            dim: 1,
            bound: 1.0,
            budgets: vec![1.0],
            seeds: vec![0],
            sweep: Sweep::Horizon,
            meta_zeta: None,
            curvature: CurvatureOverrides::default(),
            data: DataConfig::default(),
            glm: GlmConfig::default(),
            output: OutputConfig::default(),
            workers: 1,
            tol: 1e-6,
            synthetic_regret_exponent: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads `path` (or defaults), applies `over`, and validates.
    pub fn resolve(path: Option<&Path>, over: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(over);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, over: &Overrides) {
        if let Some(s) = over.seed {
            self.seeds = vec![s];
        }
        if let Some(o) = &over.out {
            self.output.dir = o.clone();
        }
        if let Some(w) = over.workers {
            self.workers = w;
        }
        if let Some(t) = over.tol {
            self.tol = t;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Validation(m));
        if self.learner == LearnerKind::Ftl && self.loss != LossKind::Squared {
            return fail("learner = \"ftl\" requires loss = \"squared\"; use \"ons\" or \"ogd\" for glm losses".into());
        }
        if self.learner == LearnerKind::Ogd
            && self.loss == LossKind::Glm
            && self.curvature.strong_convexity.is_none_or(|h| h <= 0.0)
        {
            return fail("learner = \"ogd\" with glm losses needs curvature.strong_convexity > 0".into());
        }
        if self.data.file.is_some() && self.loss != LossKind::Squared {
            return fail("data.file provides squared-loss labels; set loss = \"squared\"".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.dim == 0 {
            return fail("dim must be at least 1".into());
        }
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return fail(format!("bound must be positive, got {}", self.bound));
        }
        if self.budgets.is_empty() {
            return fail("budgets must list at least one path-length budget".into());
        }
        if let Some(c) = self.budgets.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return fail(format!("budgets must be ≥ 0, got {c}"));
        }
        if self.seeds.is_empty() {
            return fail("seeds must list at least one seed".into());
        }
        if !(self.tol > 0.0) {
            return fail(format!("tol must be positive, got {}", self.tol));
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if let Some(z) = self.meta_zeta {
            if !(z > 0.0) {
                return fail(format!("meta_zeta must be positive, got {z}"));
            }
        }
        if let Some(s) = self.data.jumps_scale {
            if !(s > 0.0) || !s.is_finite() {
                return fail(format!("data.jumps_scale must be positive, got {s}"));
            }
        }
        if !(self.glm.radius > 0.0) {
            return fail(format!("glm.radius must be positive, got {}", self.glm.radius));
        }
        let cb = self.comparator_bound();
        if !(cb > 0.0) || cb > self.bound {
            return fail(format!(
                "comparator bound {cb} must lie in (0, bound = {}]; lower data.noise or set data.comparator_bound",
                self.bound
            ));
        }
        if self.loss == LossKind::Squared && cb + self.data.noise.magnitude() > self.bound * (1.0 + 1e-12) {
            return fail(format!(
                "comparator bound {cb} plus noise magnitude {} exceeds bound {}",
                self.data.noise.magnitude(),
                self.bound
            ));
        }
        Ok(())
    }

    /// Profile for a cell of horizon `n` and budget `budget`.
    pub fn profile_for(&self, n: usize, budget: f64) -> ProfileKind {
        match (self.data.profile, self.data.jumps_scale) {
            (ProfileKind::PiecewiseConstant { .. }, Some(s)) => {
                let j = s * ((self.dim * n) as f64).cbrt() * (budget / self.bound).powf(2.0 / 3.0);
                ProfileKind::PiecewiseConstant {
                    jumps: (j.round() as usize).clamp(1, n.saturating_sub(1).max(1)),
                }
            }
            (p, _) => p,
        }
    }

    pub fn comparator_bound(&self) -> f64 {
        self.data.comparator_bound.unwrap_or(match self.loss {
            LossKind::Squared => self.bound - self.data.noise.magnitude(),
            LossKind::Glm => self.bound,
        })
    }

    /// Horizon grid for sweeps: `horizons` if given, else the single horizon.
    pub fn horizon_grid(&self) -> Vec<usize> {
        if self.horizons.is_empty() {
            vec![self.horizon]
        } else {
            self.horizons.clone()
        }
    }
}

/// `NSREGRET_WORKERS` wins over `--workers`.
pub fn workers_from_env(flag: Option<usize>) -> CliResult<Option<usize>> {
    match std::env::var("NSREGRET_WORKERS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::validation(format!("NSREGRET_WORKERS must be a positive integer, got `{v}`"))),
        _ => Ok(flag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_nested_tables() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            learner = "ons"
            meta = "aflh"
            loss = "glm"
            horizon = 256
            budgets = [0.5, 1.0]
            seeds = [1, 2, 3]
            [data]
            profile = { kind = "sinusoid", frequency = 2.0 }
            noise = { kind = "truncated_gaussian", sigma = 0.1, clip = 0.2 }
            [glm]
            link = "poisson"
            radius = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.learner, LearnerKind::Ons);
        assert_eq!(cfg.meta, MetaKind::Aflh);
        assert_eq!(cfg.data.profile, ProfileKind::Sinusoid { frequency: 2.0 });
        assert_eq!(cfg.glm.link, LinkKind::Poisson);
        cfg.validate().unwrap();
    }

    #[test]
    fn flags_win() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            out: Some("x".into()),
            workers: Some(3),
            tol: Some(1e-3),
        });
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.tol, 1e-3);
    }

    #[test]
    fn actionable_errors() {
        let bad = ExperimentConfig::from_toml("loss = \"glm\"\nlearner = \"ftl\"").unwrap();
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("ftl") && msg.contains("ons"));
        assert!(ExperimentConfig::from_toml("horizn = 3").is_err());
        let cfg = ExperimentConfig {
            data: DataConfig {
                noise: NoiseKind::Uniform { sigma: 2.0 },
                ..DataConfig::default()
            },
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
