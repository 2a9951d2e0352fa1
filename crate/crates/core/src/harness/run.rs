//! Builds a run from its configuration, replays the stream and measures regret.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::compound::CompoundVector;
use crate::environment::{
    batch_comparators, is_clamped, load_csv, loss_subgradient, loss_value, lower_bound_stream,
    make_lower_bound_instance, make_schedule, make_simplex_tasks, make_synthetic, stream_lipschitz,
    CsvSchema, Round, ScheduleSpec, SimplexTaskSpec, SyntheticTaskSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{NormTag, Regularizer, RegularizerKind};
use crate::interaction::{GraphSpec, InteractionOperator};
use crate::learners::bounds::{
    adaptive_rate_bound, constant_rate_bound, independent_bound, TheoryBound,
};
use crate::learners::rates::{adaptive_scale_from_budget, constant_rate, p_star_norm_choice};
use crate::learners::{FeasibleSet, Learner, LearnerConfig, RateSchedule, UpdateRule};
use crate::solver::SolverOptions;
use crate::variance::{admissible_b_simplex, VarianceSpec};

use super::config::{
    BallNorm, EnvironmentKind, FeasibleChoice, LearnerKind, RegularizerChoice, RuleChoice,
    RunConfig, ScheduleKind, TuningKind,
};

const SCHEDULE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Everything a run needs before the replay starts.
#[derive(Debug, Clone)]
pub struct Setup {
    pub rounds: Vec<Round>,
    pub n_tasks: usize,
    pub dim: usize,
    /// Generating task vectors of synthetic streams.
    pub reference: Option<CompoundVector>,
    /// Per-task set over which the hindsight comparators are computed.
    pub comparator_set: FeasibleSet,
    pub learner: LearnerConfig,
    pub rule: UpdateRule,
    pub b: f64,
    pub lipschitz: f64,
    /// `B`, the comparator-divergence budget of the constant-rate analysis.
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegretReport {
    pub config: RunConfig,
    /// `Σ_{s≤t} ℓ_s(x_s)` for `t = 1..T`.
    pub cumulative_loss: Vec<f64>,
    /// `R_t` against the end-of-run comparators.
    pub regret: Vec<f64>,
    pub bound: Option<Vec<f64>>,
    pub task_losses: Vec<f64>,
    pub comparator_values: Vec<f64>,
    pub final_regret: f64,
    /// Guarantee stated for this learner and tuning, evaluated at `T`.
    pub stated_bound: Option<f64>,
    /// Regret against the generating task vectors, when known.
    pub reference_regret: Option<f64>,
    /// The constant rate, or the adaptive scale.
    pub eta: f64,
    pub b: f64,
    pub lipschitz: f64,
    pub sum_sq_grad: f64,
    pub max_dual_grad: f64,
    pub rule: UpdateRule,
    pub clamped_rounds: usize,
    pub wall_clock_secs: f64,
}

impl RegretReport {
    pub fn horizon(&self) -> usize {
        self.cumulative_loss.len()
    }

    pub fn per_task_regret(&self) -> Vec<f64> {
        self.task_losses
            .iter()
            .zip(&self.comparator_values)
            .map(|(l, c)| l - c)
            .collect()
    }
}

/// Builds stream, operator, feasible set and learner configuration.
pub fn prepare(config: &RunConfig) -> Result<Setup> {
    config.check()?;
    let stream = build_stream(config)?;
    let (n, dim) = (stream.n_tasks, stream.dim);

    let regularizer = match (config.learner, config.regularizer) {
        (LearnerKind::IOgd | LearnerKind::MtOgd, _) => Regularizer::euclidean(),
        (LearnerKind::IEg | LearnerKind::MtEg, _) => Regularizer::neg_entropy(),
        (LearnerKind::MtPnorm, _) | (LearnerKind::Generic, Some(RegularizerChoice::Pnorm)) => {
            Regularizer::pnorm(match config.p {
                Some(p) => p,
                None => p_star_norm_choice(dim)?,
            })?
        }
        (LearnerKind::Generic, Some(RegularizerChoice::Euclidean)) => Regularizer::euclidean(),
        (LearnerKind::Generic, Some(RegularizerChoice::Entropy)) => Regularizer::neg_entropy(),
        (LearnerKind::Generic, None) => {
            return Err(Error::config("the generic learner needs `regularizer`"))
        }
    };

    let b = match config.b {
        Some(b) => b,
        None => match config.learner {
            LearnerKind::IOgd | LearnerKind::IEg => 0.0,
            LearnerKind::MtEg => admissible_b_simplex(config.sigma)?,
            _ if regularizer.kind() == RegularizerKind::NegEntropy => {
                admissible_b_simplex(config.sigma)?
            }
            _ if config.graph_file.is_some() => 1.0,
            _ => n as f64,
        },
    };
    let operator = match &config.graph_file {
        Some(path) => {
            InteractionOperator::laplacian(&GraphSpec::from_edge_file(path, Some(n))?.scaled(b)?)?
        }
        None => InteractionOperator::clique(n, b)?,
    };

    let (sigma, diameter) = (config.sigma, config.diameter);
    let feasible_choice = config.feasible.unwrap_or(match config.learner {
        LearnerKind::MtOgd => FeasibleChoice::Mahalanobis,
        LearnerKind::IOgd => FeasibleChoice::Ball,
        LearnerKind::Generic if regularizer.kind() != RegularizerKind::NegEntropy => {
            FeasibleChoice::Ball
        }
        _ => FeasibleChoice::Simplex,
    });
    let ball = FeasibleSet::norm_ball(ball_tag(config.ball_norm), diameter)?;
    let feasible = match feasible_choice {
        FeasibleChoice::Ball => ball,
        FeasibleChoice::Simplex => FeasibleSet::Simplex,
        FeasibleChoice::Mahalanobis => match operator.clique_b() {
            Some(b) => FeasibleSet::mahalanobis_clique(n, b, sigma, diameter)?,
            None => FeasibleSet::mahalanobis_graph(n, sigma, diameter)?,
        },
    };
    let comparator_set = match feasible {
        FeasibleSet::MahalanobisBall { .. } => ball,
        set => set,
    };

    let lipschitz = match config.lipschitz {
        Some(l) => l,
        None => {
            let l = stream_lipschitz(&stream.rounds, &comparator_set, regularizer.dual_norm())?;
            if l > 0.0 {
                l
            } else {
                1.0
            }
        }
    };

    let variance = match regularizer.kind() {
        RegularizerKind::NegEntropy => VarianceSpec::simplex(sigma)?,
        _ => VarianceSpec::norm(NormTag::L2, sigma, diameter)?,
    };
    let budget = budget(&regularizer, &operator, n, dim, sigma, diameter);
    let mut solver = SolverOptions::default();
    if let Some(tol) = config.solver_tolerance {
        solver.tolerance = tol;
    }
    if let Some(cap) = config.solver_max_iterations {
        solver.max_iterations = cap;
    }
    // The rate is a placeholder until `rate_for` picks one.
    let learner = LearnerConfig::new(
        regularizer,
        operator,
        feasible,
        RateSchedule::Constant(1.0),
        lipschitz,
    )?
    .with_variance(variance)
    .with_solver(solver);
    let rule = match config.rule {
        Some(RuleChoice::Ogd) => UpdateRule::Ogd,
        Some(RuleChoice::Eg) => UpdateRule::Eg,
        Some(RuleChoice::Generic) => UpdateRule::Generic,
        None => learner.default_rule(),
    };
    Ok(Setup {
        rounds: stream.rounds,
        n_tasks: n,
        dim,
        reference: stream.reference,
        comparator_set,
        learner,
        rule,
        b,
        lipschitz,
        budget,
    })
}

struct Stream {
    rounds: Vec<Round>,
    n_tasks: usize,
    dim: usize,
    reference: Option<CompoundVector>,
}

fn build_stream(config: &RunConfig) -> Result<Stream> {
    if config.environment == EnvironmentKind::Csv {
        let schema = CsvSchema {
            task_col: config.task_col.clone().unwrap_or_default(),
            label_col: config.label_col.clone(),
            feature_cols: config.feature_cols.clone(),
            loss: config
                .loss
                .ok_or_else(|| Error::config("csv environment needs `loss`"))?,
        };
        let path = config
            .csv_path
            .as_ref()
            .ok_or_else(|| Error::config("csv environment needs `csv_path`"))?;
        let mut data = load_csv(path, &schema)?;
        if let Some(h) = config.horizon {
            if h > data.rounds.len() {
                return Err(Error::config(format!(
                    "horizon {h} exceeds the {} rounds in {}",
                    data.rounds.len(),
                    path.display()
                )));
            }
            data.rounds.truncate(h);
        }
        let n = data.n_tasks;
        if let Some(expected) = config.n_tasks {
            if expected != n {
                return Err(Error::config(format!(
                    "n_tasks = {expected} but the data has {n} tasks"
                )));
            }
        }
        return Ok(Stream {
            rounds: data.rounds,
            n_tasks: n,
            dim: schema.feature_cols.len(),
            reference: None,
        });
    }

    let n = config
        .n_tasks
        .ok_or_else(|| Error::config("missing n_tasks"))?;
    let horizon = config
        .horizon
        .ok_or_else(|| Error::config("missing horizon"))?;
    let schedule_spec = match config.schedule {
        ScheduleKind::RoundRobin => ScheduleSpec::RoundRobin,
        ScheduleKind::Uniform => ScheduleSpec::UniformRandom {
            seed: config.seed.wrapping_add(SCHEDULE_SEED_OFFSET),
        },
        ScheduleKind::Blocked => ScheduleSpec::Blocked {
            block_len: config.block_len.unwrap_or(0),
        },
    };
    let schedule = make_schedule(schedule_spec, horizon, n)?;
    match config.environment {
        EnvironmentKind::Synthetic => {
            let dim = config.dim.ok_or_else(|| Error::config("missing dim"))?;
            let spec = SyntheticTaskSpec::new(
                n,
                dim,
                config.diameter,
                config.sigma * config.diameter,
                config.noise_std,
                config.seed,
            );
            let s = make_synthetic(&spec, horizon, &schedule)?;
            Ok(Stream {
                rounds: s.rounds,
                n_tasks: n,
                dim,
                reference: Some(s.comparator),
            })
        }
        EnvironmentKind::Simplex => {
            let dim = config.dim.ok_or_else(|| Error::config("missing dim"))?;
            let spec = SimplexTaskSpec {
                n_tasks: n,
                dim,
                sigma: config.sigma,
                noise_std: config.noise_std,
                seed: config.seed,
            };
            let s = make_simplex_tasks(&spec, horizon, &schedule)?;
            Ok(Stream {
                rounds: s.rounds,
                n_tasks: n,
                dim,
                reference: Some(s.comparator),
            })
        }
        EnvironmentKind::LowerBound => {
            if n % 2 != 0 {
                return Err(Error::config(format!(
                    "the lower-bound instance needs an even n_tasks, got {n}"
                )));
            }
            let dim = n / 2;
            if config.dim.is_some_and(|d| d != dim) {
                return Err(Error::config(format!(
                    "the lower-bound instance has dim = n_tasks / 2 = {dim}"
                )));
            }
            let instance = make_lower_bound_instance(dim, config.sigma)?;
            let rounds = lower_bound_stream(&instance, &schedule)?;
            Ok(Stream {
                rounds,
                n_tasks: n,
                dim,
                reference: Some(instance.comparator),
            })
        }
        EnvironmentKind::Csv => unreachable!("handled above"),
    }
}

fn ball_tag(norm: BallNorm) -> NormTag {
    match norm {
        BallNorm::L1 => NormTag::L1,
        BallNorm::L2 => NormTag::L2,
        BallNorm::Linf => NormTag::Linf,
    }
}

/// Upper bound on `B_ψ̄(A^{1/2}u, A^{1/2}x₁)` over small-variance comparators.
fn budget(
    reg: &Regularizer,
    op: &InteractionOperator,
    n: usize,
    dim: usize,
    sigma: f64,
    diameter: f64,
) -> Option<f64> {
    let nf = n as f64;
    let d2 = diameter * diameter;
    let s2 = sigma * sigma;
    match (reg.kind(), op.clique_b()) {
        (RegularizerKind::Euclidean, Some(b)) => {
            Some(0.5 * nf * d2 * (1.0 + b * (nf - 1.0) / nf * s2))
        }
        (RegularizerKind::Euclidean, None) => Some(0.5 * (nf * d2 + s2 * d2)),
        (RegularizerKind::PNorm { .. }, Some(b)) => {
            Some(2.0 * nf * d2 * (1.0 + b * (nf - 1.0) / nf * s2))
        }
        (RegularizerKind::NegEntropy, Some(_)) => Some(nf * (dim as f64).ln()),
        _ => None,
    }
}

/// The rate schedule a tuning prescribes; `eta` is used by fixed tuning.
fn rate_for(setup: &Setup, config: &RunConfig, eta: Option<f64>) -> Result<RateSchedule> {
    let lambda = setup.learner.regularizer.lambda();
    let m = setup.learner.operator.max_inv_diag();
    let need_budget = || {
        setup.budget.ok_or_else(|| {
            Error::Unsupported("theory tuning for this regularizer and interaction graph".into())
        })
    };
    let horizon = setup.rounds.len();
    match config.tuning {
        TuningKind::Theory => RateSchedule::constant(constant_rate(
            need_budget()?,
            m,
            lambda,
            horizon,
            setup.lipschitz,
        )),
        TuningKind::Adaptive => {
            RateSchedule::adaptive(adaptive_scale_from_budget(need_budget()?, m, lambda))
        }
        TuningKind::Fixed | TuningKind::OracleGrid => {
            RateSchedule::constant(eta.ok_or_else(|| Error::config("fixed tuning needs `eta`"))?)
        }
    }
}

struct Trace {
    cumulative_loss: Vec<f64>,
    task_losses: Vec<f64>,
    /// Prefix sums of `‖g_t‖⋆²`.
    sum_sq: Vec<f64>,
    max_dual: f64,
    clamped: usize,
}

fn replay(setup: &Setup, rate: RateSchedule) -> Result<Trace> {
    let mut config = setup.learner.clone();
    config.rate = rate;
    let dual = config.regularizer.dual_norm();
    let mut learner = Learner::with_rule(config, setup.rule, setup.dim)?;
    let horizon = setup.rounds.len();
    let mut trace = Trace {
        cumulative_loss: Vec::with_capacity(horizon),
        task_losses: vec![0.0; setup.n_tasks],
        sum_sq: Vec::with_capacity(horizon),
        max_dual: 0.0,
        clamped: 0,
    };
    let (mut total, mut sq) = (0.0, 0.0);
    for round in &setup.rounds {
        let i = round.active_task;
        let w = learner.predict(i)?;
        let loss = loss_value(&round.loss, &w)?;
        if is_clamped(&round.loss, &w) {
            trace.clamped += 1;
        }
        let g = loss_subgradient(&round.loss, &w)?;
        let gn = dual.norm(&g);
        trace.max_dual = trace.max_dual.max(gn);
        sq += gn * gn;
        total += loss;
        trace.task_losses[i] += loss;
        trace.cumulative_loss.push(total);
        trace.sum_sq.push(sq);
        learner.update(i, &g)?;
    }
    Ok(trace)
}

/// Replays the stream through the configured learner, then measures regret
/// against per-task comparators computed on the full stream.
pub fn run_experiment(config: &RunConfig) -> Result<RegretReport> {
    let start = Instant::now();
    let setup = prepare(config)?;
    run_prepared(config, &setup, start)
}

fn run_prepared(config: &RunConfig, setup: &Setup, start: Instant) -> Result<RegretReport> {
    let (rate, trace) = match config.tuning {
        TuningKind::OracleGrid => {
            let candidates: Vec<(RateSchedule, Trace)> = config
                .eta_grid
                .par_iter()
                .map(|&eta| {
                    let rate = rate_for(setup, config, Some(eta))?;
                    Ok((rate, replay(setup, rate)?))
                })
                .collect::<Result<_>>()?;
            candidates
                .into_iter()
                .reduce(|best, c| {
                    if final_loss(&c.1) < final_loss(&best.1) {
                        c
                    } else {
                        best
                    }
                })
                .expect("eta_grid is nonempty")
        }
        _ => {
            let rate = rate_for(setup, config, config.eta)?;
            (rate, replay(setup, rate)?)
        }
    };

    let comparators = batch_comparators(
        &setup.rounds,
        setup.n_tasks,
        &setup.comparator_set,
        setup.dim,
    )?;
    let mut comparator_cum = 0.0;
    let regret: Vec<f64> = setup
        .rounds
        .iter()
        .zip(&trace.cumulative_loss)
        .map(|(r, &cum)| {
            comparator_cum += loss_value(&r.loss, &comparators[r.active_task].point)?;
            Ok(cum - comparator_cum)
        })
        .collect::<Result<_>>()?;
    let reference_regret = match &setup.reference {
        Some(u) => {
            let mut total = 0.0;
            for r in &setup.rounds {
                total += loss_value(&r.loss, u.block(r.active_task))?;
            }
            Some(final_loss(&trace) - total)
        }
        None => None,
    };

    let sum_sq_grad = trace.sum_sq.last().copied().unwrap_or(0.0);
    let eta = match rate {
        RateSchedule::Constant(eta) => eta,
        RateSchedule::Adaptive { scale, .. } => scale,
    };
    let bound = bound_trajectory(setup, config, rate, &trace.sum_sq);
    let stated_bound = stated_bound(setup, config, sum_sq_grad);
    Ok(RegretReport {
        config: config.clone(),
        final_regret: regret.last().copied().unwrap_or(0.0),
        cumulative_loss: trace.cumulative_loss,
        regret,
        bound,
        task_losses: trace.task_losses,
        comparator_values: comparators.iter().map(|c| c.value).collect(),
        stated_bound,
        reference_regret,
        eta,
        b: setup.b,
        lipschitz: setup.lipschitz,
        sum_sq_grad,
        max_dual_grad: trace.max_dual,
        rule: setup.rule,
        clamped_rounds: trace.clamped,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

fn final_loss(trace: &Trace) -> f64 {
    trace.cumulative_loss.last().copied().unwrap_or(0.0)
}

/// Anytime bound from the observed gradients; absent for oracle tuning and
/// for combinations without a budget.
fn bound_trajectory(
    setup: &Setup,
    config: &RunConfig,
    rate: RateSchedule,
    sum_sq: &[f64],
) -> Option<Vec<f64>> {
    let budget = setup.budget?;
    let lambda = setup.learner.regularizer.lambda();
    let m = setup.learner.operator.max_inv_diag();
    match (config.tuning, rate) {
        (TuningKind::OracleGrid, _) => None,
        (_, RateSchedule::Constant(eta)) => Some(
            sum_sq
                .iter()
                .map(|&s| constant_rate_bound(budget, m, lambda, eta, s))
                .collect(),
        ),
        (_, RateSchedule::Adaptive { scale, .. }) => {
            let FeasibleSet::MahalanobisBall { radius_sq } = setup.learner.feasible else {
                return None;
            };
            if setup.learner.regularizer.kind() != RegularizerKind::Euclidean {
                return None;
            }
            // Divergence from a comparator to any iterate of the ellipsoid.
            let r = (2.0 * budget).sqrt() + radius_sq.sqrt();
            let max_divergence = 0.5 * r * r;
            Some(
                sum_sq
                    .iter()
                    .map(|&s| adaptive_rate_bound(max_divergence, m, lambda, scale, s))
                    .collect(),
            )
        }
    }
}

/// The guarantee stated for the learner family, evaluated at the horizon.
fn stated_bound(setup: &Setup, config: &RunConfig, sum_sq_grad: f64) -> Option<f64> {
    let (d, l, s, n, t) = (
        config.diameter,
        setup.lipschitz,
        config.sigma,
        setup.n_tasks,
        setup.rounds.len(),
    );
    let ln_d = (setup.dim as f64).ln();
    let clique = setup.learner.operator.clique_b().is_some();
    let bound = match (config.learner, config.tuning) {
        (LearnerKind::MtOgd, TuningKind::Theory) if clique => TheoryBound::Ogd {
            diameter: d,
            lipschitz: l,
            sigma: s,
            n_tasks: n,
            horizon: t,
        },
        (LearnerKind::MtOgd, TuningKind::Adaptive) if clique => TheoryBound::Adaptive {
            diameter: d,
            sigma: s,
            n_tasks: n,
            sum_sq_grad,
        },
        (LearnerKind::MtEg, TuningKind::Theory) if clique => TheoryBound::Eg {
            lipschitz: l,
            sigma: s,
            n_tasks: n,
            horizon: t,
            c: ln_d,
            lambda: 1.0,
        },
        (LearnerKind::MtPnorm, TuningKind::Theory) if clique => match setup.learner.feasible {
            FeasibleSet::Simplex if config.p.is_none() => TheoryBound::NormSimplex {
                lipschitz: l,
                sigma: s,
                n_tasks: n,
                horizon: t,
                dim: setup.dim,
            },
            _ => TheoryBound::Norm {
                diameter: d,
                lipschitz: l,
                sigma: s,
                n_tasks: n,
                horizon: t,
            },
        },
        (LearnerKind::IOgd, TuningKind::Theory) => return Some(independent_bound(d * l, n, t)),
        (LearnerKind::IEg, TuningKind::Theory) => {
            return Some(independent_bound(l * (2.0 * ln_d).sqrt(), n, t))
        }
        _ => return None,
    };
    Some(bound.value())
}
