//! Online learners: multitask OGD and EG closed forms, the generic
//! mirror-descent step, and the independent baselines obtained with `A = I`.
//!
//! The state stores the transformed iterate `y = A^{1/2} x`; predictions map
//! back through one row of `A^{-1/2}`.

pub mod bounds;
pub mod feasible;
mod generic;
pub mod rates;

use serde::{Deserialize, Serialize};

use crate::compound::CompoundVector;
use crate::error::{Error, Result};
use crate::geometry::{Regularizer, RegularizerKind};
use crate::interaction::{InteractionOperator, Which};
use crate::solver::SolverOptions;
use crate::variance::VarianceSpec;

pub use bounds::{theory_bound, TheoryBound};
pub use feasible::FeasibleSet;
pub use generic::step_generic;
pub use rates::RateSchedule;

/// Largest `|η c g_j|` for which the plain multiplicative update is used.
const EXP_SAFE: f64 = 600.0;

/// Which update implementation a [`Learner`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    Ogd,
    Eg,
    Generic,
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub regularizer: Regularizer,
    pub operator: InteractionOperator,
    pub feasible: FeasibleSet,
    pub rate: RateSchedule,
    pub variance: Option<VarianceSpec>,
    /// Bound on `‖g_t‖⋆` used by the tunings.
    pub lipschitz: f64,
    pub solver: SolverOptions,
}

impl LearnerConfig {
    pub fn new(
        regularizer: Regularizer,
        operator: InteractionOperator,
        feasible: FeasibleSet,
        rate: RateSchedule,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::param(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        if regularizer.kind() == RegularizerKind::NegEntropy && feasible != FeasibleSet::Simplex {
            return Err(Error::config(
                "the entropic regularizer requires the simplex feasible set",
            ));
        }
        Ok(Self {
            regularizer,
            operator,
            feasible,
            rate,
            variance: None,
            lipschitz,
            solver: SolverOptions::default(),
        })
    }

    pub fn with_variance(mut self, variance: VarianceSpec) -> Self {
        self.variance = Some(variance);
        self
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn n_tasks(&self) -> usize {
        self.operator.n_tasks()
    }

    /// The closed form when one applies, the generic solver otherwise.
    pub fn default_rule(&self) -> UpdateRule {
        match self.regularizer.kind() {
            RegularizerKind::Euclidean if self.supports_ogd() => UpdateRule::Ogd,
            RegularizerKind::NegEntropy if self.operator.inv_sqrt_is_stochastic() => UpdateRule::Eg,
            _ => UpdateRule::Generic,
        }
    }

    fn supports_ogd(&self) -> bool {
        match self.feasible {
            FeasibleSet::MahalanobisBall { .. } => true,
            _ => self.operator.is_identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Transformed iterate `A^{1/2} x_t`.
    pub y: CompoundVector,
    /// Number of steps taken, skipped ones included.
    pub t: u64,
    pub rate: RateSchedule,
}

impl LearnerState {
    /// Starts at `x₁ = 0`, or at uniform blocks on the simplex.
    pub fn initial(config: &LearnerConfig, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        let x = config.feasible.initial_point(config.n_tasks(), dim);
        Self::from_x(config, &x)
    }

    pub fn from_x(config: &LearnerConfig, x: &CompoundVector) -> Result<Self> {
        let y = config.operator.apply_block(Which::Sqrt, x)?;
        Ok(Self {
            y,
            t: 0,
            rate: config.rate,
        })
    }

    /// `x_t = A^{-1/2} y_t`.
    pub fn x(&self, op: &InteractionOperator) -> Result<CompoundVector> {
        op.apply_block(Which::InvSqrt, &self.y)
    }
}

/// Block `i_t` of `A^{-1/2} y`.
pub fn predict(state: &LearnerState, op: &InteractionOperator, i_t: usize) -> Result<Vec<f64>> {
    op.apply_row(Which::InvSqrt, i_t, &state.y)
}

/// Validates the round, updates the rate state and returns the step size,
/// or `None` when the step is a no-op.
fn begin_step(
    state: &mut LearnerState,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
) -> Result<Option<f64>> {
    let n = config.n_tasks();
    if i_t >= n {
        return Err(Error::TaskIndex {
            index: i_t,
            n_tasks: n,
        });
    }
    if g.len() != state.y.dim() {
        return Err(Error::Dimension {
            expected: state.y.dim(),
            found: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite gradient".into()));
    }
    let dual = config.regularizer.dual_norm().norm(g);
    let eta = state.rate.observe(dual * dual);
    state.t += 1;
    if g.iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    Ok(eta)
}

/// `y ← Proj(y - η A^{-1/2} ḡ, radius)`; with `A = I` and a per-task set
/// only the active block moves and is projected on its own.
pub fn step_ogd(
    state: &mut LearnerState,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
) -> Result<()> {
    if config.regularizer.kind() != RegularizerKind::Euclidean {
        return Err(Error::config(
            "the OGD update needs the Euclidean regularizer",
        ));
    }
    if !config.supports_ogd() {
        return Err(Error::Unsupported(
            "closed-form OGD with a per-task feasible set requires A = I".into(),
        ));
    }
    let Some(eta) = begin_step(state, config, i_t, g)? else {
        return Ok(());
    };
    let op = &config.operator;
    match config.feasible {
        FeasibleSet::MahalanobisBall { radius_sq } => {
            for i in 0..op.n_tasks() {
                let c = op.entry(Which::InvSqrt, i, i_t);
                if c != 0.0 {
                    for (y, gj) in state.y.block_mut(i).iter_mut().zip(g) {
                        *y -= eta * c * gj;
                    }
                }
            }
            feasible::project_l2_ball(state.y.as_mut_slice(), radius_sq.sqrt());
        }
        set => {
            let block = state.y.block_mut(i_t);
            for (y, gj) in block.iter_mut().zip(g) {
                *y -= eta * gj;
            }
            set.project_block(block)?;
        }
    }
    Ok(())
}

/// `y_{i,j} ∝ y_{i,j} exp(-η [A^{-1/2}]_{i,i_t} g_j)`, normalized per block.
pub fn step_eg(
    state: &mut LearnerState,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
) -> Result<()> {
    if config.regularizer.kind() != RegularizerKind::NegEntropy
        || config.feasible != FeasibleSet::Simplex
    {
        return Err(Error::config(
            "the EG update needs the entropic regularizer on the simplex",
        ));
    }
    if !config.operator.inv_sqrt_is_stochastic() {
        return Err(Error::Unsupported(
            "EG update with a non-stochastic A^-1/2".into(),
        ));
    }
    let Some(eta) = begin_step(state, config, i_t, g)? else {
        return Ok(());
    };
    let op = &config.operator;
    for i in 0..op.n_tasks() {
        let c = op.entry(Which::InvSqrt, i, i_t);
        if c != 0.0 {
            exponentiated_update(state.y.block_mut(i), eta * c, g);
        }
    }
    Ok(())
}

fn exponentiated_update(y: &mut [f64], scale: f64, g: &[f64]) {
    let spread = g.iter().fold(0.0f64, |m, v| m.max((scale * v).abs()));
    if spread <= EXP_SAFE {
        let mut sum = 0.0;
        for (v, gj) in y.iter_mut().zip(g) {
            *v *= (-scale * gj).exp();
            sum += *v;
        }
        y.iter_mut().for_each(|v| *v /= sum);
        return;
    }
    // large exponents: shift in the log domain before exponentiating
    let logs: Vec<f64> = y
        .iter()
        .zip(g)
        .map(|(&v, gj)| {
            if v > 0.0 {
                v.ln() - scale * gj
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (v, l) in y.iter_mut().zip(&logs) {
        *v = (l - top).exp();
        sum += *v;
    }
    y.iter_mut().for_each(|v| *v /= sum);
}

/// A learner instance: configuration, state and the chosen update rule.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    rule: UpdateRule,
    state: LearnerState,
}

impl Learner {
    pub fn new(config: LearnerConfig, dim: usize) -> Result<Self> {
        let rule = config.default_rule();
        Self::with_rule(config, rule, dim)
    }

    pub fn with_rule(config: LearnerConfig, rule: UpdateRule, dim: usize) -> Result<Self> {
        let state = LearnerState::initial(&config, dim)?;
        Ok(Self {
            config,
            rule,
            state,
        })
    }

    /// Starts from an arbitrary feasible compound point.
    pub fn starting_at(
        config: LearnerConfig,
        rule: UpdateRule,
        x: &CompoundVector,
    ) -> Result<Self> {
        let state = LearnerState::from_x(&config, x)?;
        Ok(Self {
            config,
            rule,
            state,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn rule(&self) -> UpdateRule {
        self.rule
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn predict(&self, i_t: usize) -> Result<Vec<f64>> {
        predict(&self.state, &self.config.operator, i_t)
    }

    pub fn update(&mut self, i_t: usize, g: &[f64]) -> Result<()> {
        match self.rule {
            UpdateRule::Ogd => step_ogd(&mut self.state, &self.config, i_t, g),
            UpdateRule::Eg => step_eg(&mut self.state, &self.config, i_t, g),
            UpdateRule::Generic => step_generic(&mut self.state, &self.config, i_t, g),
        }
    }

    /// The current compound iterate `x_t`.
    pub fn iterate(&self) -> Result<CompoundVector> {
        self.state.x(&self.config.operator)
    }
}
