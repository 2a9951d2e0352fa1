//! Feasible sets and their Euclidean projections.

use serde::{Deserialize, Serialize};

use crate::compound::CompoundVector;
use crate::error::{Error, Result};
use crate::geometry::{is_on_simplex, NormTag};
use crate::interaction::InteractionOperator;

const ELLIPSOID_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeasibleSet {
    /// Per-task ball `‖x_i‖ ≤ radius`.
    NormBall { norm: NormTag, radius: f64 },
    /// Per-task probability simplex.
    Simplex,
    /// `{x : ‖x‖_A² ≤ radius_sq}` on the compound vector.
    MahalanobisBall { radius_sq: f64 },
}

impl FeasibleSet {
    pub fn norm_ball(norm: NormTag, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if let NormTag::Lp(p) = norm {
            if p != 1.0 && p != 2.0 {
                return Err(Error::Unsupported(format!("projection onto the l{p} ball")));
            }
        }
        Ok(FeasibleSet::NormBall { norm, radius })
    }

    pub fn mahalanobis(radius_sq: f64) -> Result<Self> {
        if !(radius_sq > 0.0) || !radius_sq.is_finite() {
            return Err(Error::param(format!(
                "ellipsoid radius must be positive, got {radius_sq}"
            )));
        }
        Ok(FeasibleSet::MahalanobisBall { radius_sq })
    }

    /// `(1 + bσ²) N D²` for the clique family.
    pub fn mahalanobis_clique(n_tasks: usize, b: f64, sigma: f64, diameter: f64) -> Result<Self> {
        Self::mahalanobis((1.0 + b * sigma * sigma) * n_tasks as f64 * diameter * diameter)
    }

    /// `N D² + σ² D²` for `A = I + L^W` with graph-weighted variance at most `σ²D²`.
    pub fn mahalanobis_graph(n_tasks: usize, sigma: f64, diameter: f64) -> Result<Self> {
        let d2 = diameter * diameter;
        Self::mahalanobis(n_tasks as f64 * d2 + sigma * sigma * d2)
    }

    /// Whether the set is a product of identical per-task sets.
    pub fn is_per_task(&self) -> bool {
        !matches!(self, FeasibleSet::MahalanobisBall { .. })
    }

    pub fn contains_block(&self, x: &[f64], tol: f64) -> Result<bool> {
        match *self {
            FeasibleSet::NormBall { norm, radius } => Ok(norm.norm(x) <= radius + tol),
            FeasibleSet::Simplex => Ok(is_on_simplex(x)),
            FeasibleSet::MahalanobisBall { .. } => Err(Error::Unsupported(
                "per-task membership for a compound ellipsoid".into(),
            )),
        }
    }

    pub fn contains(&self, x: &CompoundVector, op: &InteractionOperator, tol: f64) -> Result<bool> {
        match *self {
            FeasibleSet::MahalanobisBall { radius_sq } => Ok(a_norm_sq(x, op)? <= radius_sq + tol),
            _ => {
                for block in x.blocks() {
                    if !self.contains_block(block, tol)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Projects one task block onto a per-task set.
    pub fn project_block(&self, x: &mut [f64]) -> Result<()> {
        match *self {
            FeasibleSet::NormBall { norm, radius } => match norm {
                NormTag::L2 => project_l2_ball(x, radius),
                NormTag::L1 => project_l1_ball(x, radius),
                NormTag::Linf => project_linf_ball(x, radius),
                NormTag::Lp(1.0) => project_l1_ball(x, radius),
                NormTag::Lp(2.0) => project_l2_ball(x, radius),
                other => {
                    return Err(Error::Unsupported(format!(
                        "projection onto the {other:?} ball"
                    )))
                }
            },
            FeasibleSet::Simplex => project_simplex(x),
            FeasibleSet::MahalanobisBall { .. } => {
                return Err(Error::Unsupported(
                    "blockwise projection onto a compound ellipsoid".into(),
                ))
            }
        }
        Ok(())
    }

    /// Euclidean projection of the compound vector.
    pub fn project(&self, x: &mut CompoundVector, op: &InteractionOperator) -> Result<()> {
        match *self {
            FeasibleSet::MahalanobisBall { radius_sq } => project_ellipsoid(x, op, radius_sq),
            _ => {
                for block in x.blocks_mut() {
                    self.project_block(block)?;
                }
                Ok(())
            }
        }
    }

    /// `x₁ = 0` when feasible, uniform blocks otherwise.
    pub fn initial_point(&self, n_tasks: usize, dim: usize) -> CompoundVector {
        match self {
            FeasibleSet::Simplex => CompoundVector::repeated(n_tasks, &vec![1.0 / dim as f64; dim]),
            _ => CompoundVector::zeros(n_tasks, dim),
        }
    }
}

/// `‖x‖_A² = Σ_ik A_ik ⟨x_i, x_k⟩`.
pub fn a_norm_sq(x: &CompoundVector, op: &InteractionOperator) -> Result<f64> {
    if x.n_tasks() != op.n_tasks() {
        return Err(Error::Dimension {
            expected: op.n_tasks(),
            found: x.n_tasks(),
        });
    }
    let a = op.matrix(crate::interaction::Which::A);
    let mut total = 0.0;
    for i in 0..x.n_tasks() {
        for k in 0..x.n_tasks() {
            let c = a[(i, k)];
            if c != 0.0 {
                total += c * crate::geometry::dot(x.block(i), x.block(k));
            }
        }
    }
    Ok(total)
}

/// `Proj(x, τ) = min(1, τ/‖x‖₂) x`.
pub fn project_l2_ball(x: &mut [f64], radius: f64) {
    let n = NormTag::L2.norm(x);
    if n > radius {
        let s = radius / n;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn project_linf_ball(x: &mut [f64], radius: f64) {
    x.iter_mut().for_each(|v| *v = v.clamp(-radius, radius));
}

/// Sort-based projection onto `{x : ‖x‖₁ ≤ radius}`.
pub fn project_l1_ball(x: &mut [f64], radius: f64) {
    if NormTag::L1.norm(x) <= radius {
        return;
    }
    let mut mag: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let theta = simplex_threshold(&mut mag, radius);
    for v in x.iter_mut() {
        *v = v.signum() * (v.abs() - theta).max(0.0);
    }
}

/// Sort-based projection onto the probability simplex.
pub fn project_simplex(x: &mut [f64]) {
    let mut sorted = x.to_vec();
    let theta = simplex_threshold(&mut sorted, 1.0);
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

fn simplex_threshold(values: &mut [f64], total: f64) -> f64 {
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in values.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - total) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    theta
}

/// Euclidean projection onto `{x : ‖x‖_A² ≤ radius_sq}`.
///
/// In the eigenbasis `A = QΛQᵀ` the solution is `w_k / (1 + μλ_k)` with `μ ≥ 0`
/// the root of `Σ_k λ_k ‖w_k‖² / (1 + μλ_k)² = radius_sq`, found by Newton's
/// method (monotone from the left because the map is convex and decreasing).
pub fn project_ellipsoid(
    x: &mut CompoundVector,
    op: &InteractionOperator,
    radius_sq: f64,
) -> Result<()> {
    let current = a_norm_sq(x, op)?;
    if current <= radius_sq {
        return Ok(());
    }
    let n = x.n_tasks();
    let dim = x.dim();
    let q = op.eigenvectors();
    let lam = op.eigenvalues();
    let mut w = CompoundVector::zeros(n, dim);
    for k in 0..n {
        let wk = w.block_mut(k);
        for i in 0..n {
            let c = q[(i, k)];
            for (o, v) in wk.iter_mut().zip(x.block(i)) {
                *o += c * v;
            }
        }
    }
    let weights: Vec<f64> = (0..n)
        .map(|k| lam[k] * crate::geometry::dot(w.block(k), w.block(k)))
        .collect();
    let phi = |mu: f64| -> (f64, f64) {
        let mut val = 0.0;
        let mut der = 0.0;
        for k in 0..n {
            let den = 1.0 + mu * lam[k];
            val += weights[k] / (den * den);
            der -= 2.0 * weights[k] * lam[k] / (den * den * den);
        }
        (val, der)
    };
    let mut mu = 0.0;
    for _ in 0..ELLIPSOID_MAX_ITER {
        let (val, der) = phi(mu);
        let gap = val - radius_sq;
        if gap <= radius_sq * 1e-15 || der == 0.0 {
            break;
        }
        mu -= gap / der;
    }
    for k in 0..n {
        let s = 1.0 / (1.0 + mu * lam[k]);
        w.block_mut(k).iter_mut().for_each(|v| *v *= s);
    }
    let out = x.as_mut_slice();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        for k in 0..n {
            let c = q[(i, k)];
            for (o, v) in out[i * dim..(i + 1) * dim].iter_mut().zip(w.block(k)) {
                *o += c * v;
            }
        }
    }
    let reached = a_norm_sq(x, op)?;
    if reached > radius_sq {
        let s = (radius_sq / reached).sqrt();
        x.as_mut_slice().iter_mut().for_each(|v| *v *= s);
    }
    Ok(())
}
