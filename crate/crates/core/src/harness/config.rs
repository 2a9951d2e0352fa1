//! Run configuration: a flat TOML document whose unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::LossKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    IOgd,
    MtOgd,
    IEg,
    MtEg,
    MtPnorm,
    /// Regularizer and feasible set given explicitly; generic solver.
    Generic,
}

impl LearnerKind {
    pub fn is_independent(&self) -> bool {
        matches!(self, LearnerKind::IOgd | LearnerKind::IEg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerChoice {
    Euclidean,
    Pnorm,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibleChoice {
    /// Per-task ball of radius `diameter` in `ball_norm`.
    Ball,
    Simplex,
    /// Compound ellipsoid sized from `sigma` and `diameter`.
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallNorm {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleChoice {
    Ogd,
    Eg,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    /// Square-loss regression tasks with controlled Euclidean variance.
    Synthetic,
    /// Square-loss tasks on the simplex with controlled simplex variance.
    Simplex,
    /// The `N = 2d` linear-loss construction.
    LowerBound,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    RoundRobin,
    Uniform,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuningKind {
    /// Constant rate from the regret bound.
    Theory,
    /// `η_t = c / √(Σ‖g_s‖⋆²)` with `c` from the regret bound.
    Adaptive,
    /// The constant `eta`.
    Fixed,
    /// Best final loss over `eta_grid`, chosen in hindsight.
    OracleGrid,
}

fn default_name() -> String {
    "run".into()
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_schedule() -> ScheduleKind {
    ScheduleKind::RoundRobin
}
fn default_tuning() -> TuningKind {
    TuningKind::Theory
}
fn default_ball() -> BallNorm {
    BallNorm::L2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub learner: LearnerKind,
    pub regularizer: Option<RegularizerChoice>,
    /// Exponent of the p-norm regularizer; defaults to `2 ln d / (2 ln d - 1)`.
    pub p: Option<f64>,
    pub feasible: Option<FeasibleChoice>,
    #[serde(default = "default_ball")]
    pub ball_norm: BallNorm,
    pub rule: Option<RuleChoice>,

    pub environment: EnvironmentKind,
    pub n_tasks: Option<usize>,
    pub dim: Option<usize>,
    #[serde(default = "one")]
    pub diameter: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub noise_std: f64,
    pub csv_path: Option<PathBuf>,
    pub task_col: Option<String>,
    pub label_col: Option<String>,
    #[serde(default)]
    pub feature_cols: Vec<String>,
    pub loss: Option<LossKind>,

    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    pub block_len: Option<usize>,

    /// Clique coupling, or the multiplier of the graph weights.
    pub b: Option<f64>,
    pub graph_file: Option<PathBuf>,

    #[serde(default = "default_tuning")]
    pub tuning: TuningKind,
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta_grid: Vec<f64>,
    /// Overrides the gradient bound computed from the stream.
    pub lipschitz: Option<f64>,

    /// Number of rounds; CSV runs default to the whole file.
    pub horizon: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub repetitions: usize,

    pub solver_tolerance: Option<f64>,
    pub solver_max_iterations: Option<usize>,

    #[serde(default)]
    pub sweep_b: Vec<f64>,
    #[serde(default)]
    pub sweep_eta: Vec<f64>,
    #[serde(default)]
    pub sweep_sigma: Vec<f64>,
    #[serde(default)]
    pub sweep_n_tasks: Vec<usize>,
}

impl RunConfig {
    /// A configuration with every optional key unset.
    pub fn new(learner: LearnerKind, environment: EnvironmentKind) -> Self {
        Self {
            name: default_name(),
            learner,
            regularizer: None,
            p: None,
            feasible: None,
            ball_norm: BallNorm::L2,
            rule: None,
            environment,
            n_tasks: None,
            dim: None,
            diameter: 1.0,
            sigma: 0.0,
            noise_std: 0.0,
            csv_path: None,
            task_col: None,
            label_col: None,
            feature_cols: Vec::new(),
            loss: None,
            schedule: ScheduleKind::RoundRobin,
            block_len: None,
            b: None,
            graph_file: None,
            tuning: TuningKind::Theory,
            eta: None,
            eta_grid: Vec::new(),
            lipschitz: None,
            horizon: None,
            seed: 0,
            repetitions: 1,
            solver_tolerance: None,
            solver_max_iterations: None,
            sweep_b: Vec::new(),
            sweep_eta: Vec::new(),
            sweep_sigma: Vec::new(),
            sweep_n_tasks: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.csv_path, &mut config.graph_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes")
    }

    /// Static consistency checks that need no data.
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if !(self.diameter > 0.0) || !self.diameter.is_finite() {
            return fail(format!("diameter must be positive, got {}", self.diameter));
        }
        for s in std::iter::once(&self.sigma).chain(&self.sweep_sigma) {
            if !(0.0..=1.0).contains(s) {
                return fail(format!("sigma must lie in [0, 1], got {s}"));
            }
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return fail(format!(
                "noise_std must be finite and nonnegative, got {}",
                self.noise_std
            ));
        }
        for b in self.b.iter().chain(&self.sweep_b) {
            if !(*b >= 0.0) || !b.is_finite() {
                return fail(format!("b must be finite and nonnegative, got {b}"));
            }
        }
        for eta in self.eta.iter().chain(&self.eta_grid).chain(&self.sweep_eta) {
            if !(*eta > 0.0) || !eta.is_finite() {
                return fail(format!("learning rates must be positive, got {eta}"));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) || !l.is_finite() {
                return fail(format!("lipschitz must be positive, got {l}"));
            }
        }
        if self.sweep_n_tasks.contains(&0) || self.n_tasks == Some(0) || self.dim == Some(0) {
            return fail("n_tasks and dim must be positive".into());
        }
        if self.horizon == Some(0) {
            return fail("horizon must be positive".into());
        }
        match self.tuning {
            TuningKind::Fixed if self.eta.is_none() && self.sweep_eta.is_empty() => {
                return fail("fixed tuning needs `eta`".into())
            }
            TuningKind::OracleGrid if self.eta_grid.is_empty() => {
                return fail("oracle-grid tuning needs a nonempty `eta_grid`".into())
            }
            _ => {}
        }
        if self.tuning != TuningKind::Fixed && !self.sweep_eta.is_empty() {
            return fail("sweep_eta needs fixed tuning".into());
        }
        if self.learner.is_independent() && self.b.iter().chain(&self.sweep_b).any(|&b| b != 0.0) {
            return fail("independent learners use b = 0".into());
        }
        if self.learner.is_independent() && self.graph_file.is_some() {
            return fail("independent learners take no interaction graph".into());
        }
        if self.learner == LearnerKind::Generic && self.regularizer.is_none() {
            return fail("the generic learner needs `regularizer`".into());
        }
        if self.learner != LearnerKind::Generic && self.regularizer.is_some() {
            return fail("`regularizer` is only read by the generic learner".into());
        }
        if self.schedule == ScheduleKind::Blocked && self.block_len.unwrap_or(0) == 0 {
            return fail("blocked schedule needs block_len >= 1".into());
        }
        match self.environment {
            EnvironmentKind::Csv => {
                if self.csv_path.is_none() || self.task_col.is_none() || self.loss.is_none() {
                    return fail("csv environment needs csv_path, task_col and loss".into());
                }
                if self.feature_cols.is_empty() {
                    return fail("csv environment needs feature_cols".into());
                }
                if self.schedule != ScheduleKind::RoundRobin {
                    return fail("csv runs take their schedule from the file".into());
                }
                if !self.sweep_n_tasks.is_empty() {
                    return fail("csv runs cannot sweep n_tasks".into());
                }
            }
            _ => {
                if self.n_tasks.is_none() && self.sweep_n_tasks.is_empty() {
                    return fail("synthetic environments need n_tasks".into());
                }
                if self.horizon.is_none() {
                    return fail("synthetic environments need horizon".into());
                }
                if self.environment != EnvironmentKind::LowerBound && self.dim.is_none() {
                    return fail("synthetic environments need dim".into());
                }
            }
        }
        Ok(())
    }
}
