//! Mirror-descent step by numerical minimization, for geometries without a
//! closed form.
//!
//! Norm regularizers are solved in `x` over the feasible set. The entropic
//! regularizer is solved in `y = A^{1/2} x` over the product of simplices,
//! which is exact when `A^{-1/2}` is stochastic.

use crate::compound::CompoundVector;
use crate::error::{Error, Result};
use crate::geometry::{Regularizer, RegularizerKind, ENTROPY_FLOOR};
use crate::interaction::Which;
use crate::solver::projected_gradient;

use super::feasible::project_simplex;
use super::{begin_step, FeasibleSet, LearnerConfig, LearnerState};

/// `argmin_{x ∈ V} ⟨η ḡ_t, x⟩ + B_ψ̄(A^{1/2}x, A^{1/2}x_t)` to gradient-mapping
/// tolerance, then stores `y = A^{1/2}x`.
pub fn step_generic(
    state: &mut LearnerState,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
) -> Result<()> {
    if config.regularizer.kind() == RegularizerKind::NegEntropy {
        if config.feasible != FeasibleSet::Simplex {
            return Err(Error::config(
                "the entropic regularizer requires the simplex feasible set",
            ));
        }
        if !config.operator.inv_sqrt_is_stochastic() {
            return Err(Error::Unsupported(
                "entropic update with a non-stochastic A^-1/2".into(),
            ));
        }
    }
    let Some(eta) = begin_step(state, config, i_t, g)? else {
        return Ok(());
    };
    state.y = match config.regularizer.kind() {
        RegularizerKind::NegEntropy => entropic_step(&state.y, config, i_t, g, eta)?,
        _ => norm_step(&state.y, config, i_t, g, eta)?,
    };
    Ok(())
}

fn norm_step(
    y_t: &CompoundVector,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
    eta: f64,
) -> Result<CompoundVector> {
    let op = &config.operator;
    let (n, dim) = (y_t.n_tasks(), y_t.dim());
    let reg = config.regularizer;
    let grad_t = compound_mirror_grad(&reg, y_t);
    let x_t = op.apply_block(Which::InvSqrt, y_t)?;
    let feasible = config.feasible;
    let mut scratch = CompoundVector::zeros(n, dim);
    let mut diff = CompoundVector::zeros(n, dim);
    let mut failure = None;

    let grad = |x: &[f64], out: &mut [f64]| {
        scratch.as_mut_slice().copy_from_slice(x);
        let y = op
            .apply_block(Which::Sqrt, &scratch)
            .expect("shape checked");
        let gy = compound_mirror_grad(&reg, &y);
        for ((d, a), b) in diff
            .as_mut_slice()
            .iter_mut()
            .zip(gy.as_slice())
            .zip(grad_t.as_slice())
        {
            *d = a - b;
        }
        let back = op.apply_block(Which::Sqrt, &diff).expect("shape checked");
        out.copy_from_slice(back.as_slice());
        for (o, gj) in out[i_t * dim..(i_t + 1) * dim].iter_mut().zip(g) {
            *o += eta * gj;
        }
    };
    let mut proj_buf = CompoundVector::zeros(n, dim);
    let project = |x: &mut [f64]| {
        proj_buf.as_mut_slice().copy_from_slice(x);
        if let Err(e) = feasible.project(&mut proj_buf, op) {
            failure.get_or_insert(e);
        }
        x.copy_from_slice(proj_buf.as_slice());
    };
    let solution = projected_gradient(x_t.into_vec(), grad, project, &config.solver);
    if let Some(e) = failure {
        return Err(e);
    }
    let x = CompoundVector::new(n, dim, solution?.x)?;
    op.apply_block(Which::Sqrt, &x)
}

fn entropic_step(
    y_t: &CompoundVector,
    config: &LearnerConfig,
    i_t: usize,
    g: &[f64],
    eta: f64,
) -> Result<CompoundVector> {
    let op = &config.operator;
    let (n, dim) = (y_t.n_tasks(), y_t.dim());
    // linear term η A^{-1/2} ḡ: column i_t of A^{-1/2} times g
    let mut lin = vec![0.0; n * dim];
    for i in 0..n {
        let c = eta * op.entry(Which::InvSqrt, i, i_t);
        for (o, gj) in lin[i * dim..(i + 1) * dim].iter_mut().zip(g) {
            *o = c * gj;
        }
    }
    let log_t: Vec<f64> = y_t
        .as_slice()
        .iter()
        .map(|v| v.max(ENTROPY_FLOOR).ln())
        .collect();
    let grad = |y: &[f64], out: &mut [f64]| {
        for k in 0..out.len() {
            out[k] = lin[k] + y[k].max(ENTROPY_FLOOR).ln() - log_t[k];
        }
    };
    let project = |y: &mut [f64]| y.chunks_mut(dim).for_each(project_simplex);
    let solution = projected_gradient(y_t.as_slice().to_vec(), grad, project, &config.solver)?;
    CompoundVector::new(n, dim, solution.x)
}

fn compound_mirror_grad(reg: &Regularizer, y: &CompoundVector) -> CompoundVector {
    let mut out = y.clone();
    for block in out.blocks_mut() {
        match reg.mirror_grad(block) {
            Ok(v) => block.copy_from_slice(&v),
            Err(_) => block.iter_mut().for_each(|v| *v = f64::NAN),
        }
    }
    out
}
