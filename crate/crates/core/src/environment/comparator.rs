//! Best fixed per-task predictors in hindsight.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learners::FeasibleSet;
use crate::solver::{projected_gradient, SolverOptions};

use super::loss::{loss_subgradient, loss_value, LossInstance};
use super::Round;

pub const COMPARATOR_TOLERANCE: f64 = 1e-8;
pub const COMPARATOR_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchComparator {
    pub point: Vec<f64>,
    /// `Σ_t ℓ_t(point)` over the task's rounds.
    pub value: f64,
    pub iterations: usize,
}

/// `argmin_{u ∈ V} Σ_t ℓ_t(u)` by projected gradient on the averaged loss.
/// With no rounds the value is 0 and the point is the set's default start.
pub fn batch_comparator(
    losses: &[&LossInstance],
    set: &FeasibleSet,
    dim: usize,
) -> Result<BatchComparator> {
    if !set.is_per_task() {
        return Err(Error::Unsupported(
            "batch comparators need a per-task feasible set".into(),
        ));
    }
    let start = set.initial_point(1, dim).into_vec();
    if losses.is_empty() {
        return Ok(BatchComparator {
            point: start,
            value: 0.0,
            iterations: 0,
        });
    }
    if let Some(bad) = losses.iter().find(|l| l.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: bad.dim(),
        });
    }
    let inv_count = 1.0 / losses.len() as f64;
    let mut failure = None;
    let grad = |w: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for l in losses {
            match loss_subgradient(l, w) {
                Ok(g) => out
                    .iter_mut()
                    .zip(&g)
                    .for_each(|(o, gi)| *o += gi * inv_count),
                Err(_) => out.iter_mut().for_each(|o| *o = f64::NAN),
            }
        }
    };
    let project = |w: &mut [f64]| {
        if let Err(e) = set.project_block(w) {
            failure.get_or_insert(e);
        }
    };
    let opts = SolverOptions {
        tolerance: COMPARATOR_TOLERANCE,
        max_iterations: COMPARATOR_MAX_ITERATIONS,
    };
    let solution = projected_gradient(start, grad, project, &opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let solution = solution?;
    let value = losses
        .iter()
        .map(|l| loss_value(l, &solution.x))
        .sum::<Result<f64>>()?;
    Ok(BatchComparator {
        point: solution.x,
        value,
        iterations: solution.iterations,
    })
}

/// One comparator per task, computed in parallel.
pub fn batch_comparators(
    rounds: &[Round],
    n_tasks: usize,
    set: &FeasibleSet,
    dim: usize,
) -> Result<Vec<BatchComparator>> {
    let mut per_task: Vec<Vec<&LossInstance>> = vec![Vec::new(); n_tasks];
    for r in rounds {
        if r.active_task >= n_tasks {
            return Err(Error::TaskIndex {
                index: r.active_task,
                n_tasks,
            });
        }
        per_task[r.active_task].push(&r.loss);
    }
    per_task
        .par_iter()
        .map(|losses| batch_comparator(losses, set, dim))
        .collect()
}
