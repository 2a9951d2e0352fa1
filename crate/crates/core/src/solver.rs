//! Projected gradient descent used by the generic mirror-descent step and by
//! the batch comparators.
//!
//! Steps start from a Barzilai-Borwein guess and are halved until the
//! curvature test `⟨∇f(x⁺) - ∇f(x), x⁺ - x⟩ ≤ ‖x⁺ - x‖² / 2s` holds. For convex
//! `f` this implies the usual sufficient-decrease condition while only using
//! gradients, so it stays reliable when objective differences fall below
//! rounding error near the optimum.

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `‖x - P(x - ∇f(x))‖₂` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final gradient-mapping norm.
    pub residual: f64,
}

/// Minimizes a smooth convex `f` over a closed convex set.
///
/// `grad(x, out)` writes `∇f(x)` into `out`; `project(x)` replaces `x` by its
/// Euclidean projection. Fails with [`Error::NonConvergence`] when the
/// iteration cap is reached.
pub fn projected_gradient<G, P>(
    x0: Vec<f64>,
    mut grad: G,
    mut project: P,
    opts: &SolverOptions,
) -> Result<Solution>
where
    G: FnMut(&[f64], &mut [f64]),
    P: FnMut(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0;
    project(&mut x);
    let mut g = vec![0.0; n];
    grad(&x, &mut g);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut probe = vec![0.0; n];
    let mut step = 1.0;
    let mut residual = f64::INFINITY;

    for iteration in 0..opts.max_iterations {
        residual = mapping_norm(&x, &g, &mut probe, &mut project);
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual,
            });
        }
        if residual <= opts.tolerance {
            return Ok(Solution {
                x,
                iterations: iteration,
                residual,
            });
        }
        let (dd, dg) = loop {
            for ((o, a), b) in xn.iter_mut().zip(&x).zip(&g) {
                *o = a - step * b;
            }
            project(&mut xn);
            grad(&xn, &mut gn);
            let mut dd = 0.0;
            let mut dg = 0.0;
            for i in 0..n {
                let d = xn[i] - x[i];
                dd += d * d;
                dg += (gn[i] - g[i]) * d;
            }
            if dd > 0.0 && dg.is_finite() && dg <= dd / (2.0 * step) {
                break (dd, dg);
            }
            if dd == 0.0 && step >= MAX_STEP {
                break (dd, dg);
            }
            step = if dd == 0.0 {
                (step * 4.0).min(MAX_STEP)
            } else {
                step * 0.5
            };
            if step < MIN_STEP {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                });
            }
        };
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        step = if dg > 0.0 {
            (dd / (2.0 * dg)).clamp(MIN_STEP, MAX_STEP)
        } else {
            (step * 4.0).min(MAX_STEP)
        };
    }
    let last = mapping_norm(&x, &g, &mut probe, &mut project);
    if last <= opts.tolerance {
        return Ok(Solution {
            x,
            iterations: opts.max_iterations,
            residual: last,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: residual.min(last),
    })
}

fn mapping_norm<P: FnMut(&mut [f64])>(
    x: &[f64],
    g: &[f64],
    probe: &mut [f64],
    project: &mut P,
) -> f64 {
    for ((o, a), b) in probe.iter_mut().zip(x).zip(g) {
        *o = a - b;
    }
    project(probe);
    probe
        .iter()
        .zip(x)
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        .sqrt()
}
