//! Regret upper bounds used as empirical checks.

use serde::{Deserialize, Serialize};

/// Right-hand sides of the multitask regret guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TheoryBound {
    /// `DL√(1+σ²(N-1))√(2T)` for multitask OGD.
    Ogd {
        diameter: f64,
        lipschitz: f64,
        sigma: f64,
        n_tasks: usize,
        horizon: usize,
    },
    /// `DL√(1+σ²(N-1))√(8T)` for `½‖·‖²` with an arbitrary norm.
    Norm {
        diameter: f64,
        lipschitz: f64,
        sigma: f64,
        n_tasks: usize,
        horizon: usize,
    },
    /// `L√(1+σ²(N-1))√(16e T ln d)` for the tuned `p`-norm on the simplex.
    NormSimplex {
        lipschitz: f64,
        sigma: f64,
        n_tasks: usize,
        horizon: usize,
        dim: usize,
    },
    /// `8D√(1+σ²(N-1))√(Σ‖g_t‖⋆²)` for adaptive rates.
    Adaptive {
        diameter: f64,
        sigma: f64,
        n_tasks: usize,
        sum_sq_grad: f64,
    },
    /// `16D√(1+σ²(N-1))(2MD√(1+σ²(N-1)) + √(M Σ ℓ_t(u)))` for `M`-smooth losses.
    Smooth {
        diameter: f64,
        sigma: f64,
        n_tasks: usize,
        smoothness: f64,
        comparator_loss: f64,
    },
    /// `L√(1+σ²(N-1))√(2CT/λ)` for multitask EG.
    Eg {
        lipschitz: f64,
        sigma: f64,
        n_tasks: usize,
        horizon: usize,
        c: f64,
        lambda: f64,
    },
}

fn accel(sigma: f64, n_tasks: usize) -> f64 {
    (1.0 + sigma * sigma * (n_tasks as f64 - 1.0)).sqrt()
}

impl TheoryBound {
    pub fn value(&self) -> f64 {
        match *self {
            TheoryBound::Ogd {
                diameter,
                lipschitz,
                sigma,
                n_tasks,
                horizon,
            } => diameter * lipschitz * accel(sigma, n_tasks) * (2.0 * horizon as f64).sqrt(),
            TheoryBound::Norm {
                diameter,
                lipschitz,
                sigma,
                n_tasks,
                horizon,
            } => diameter * lipschitz * accel(sigma, n_tasks) * (8.0 * horizon as f64).sqrt(),
            TheoryBound::NormSimplex {
                lipschitz,
                sigma,
                n_tasks,
                horizon,
                dim,
            } => {
                lipschitz
                    * accel(sigma, n_tasks)
                    * (16.0 * std::f64::consts::E * horizon as f64 * (dim as f64).ln()).sqrt()
            }
            TheoryBound::Adaptive {
                diameter,
                sigma,
                n_tasks,
                sum_sq_grad,
            } => 8.0 * diameter * accel(sigma, n_tasks) * sum_sq_grad.sqrt(),
            TheoryBound::Smooth {
                diameter,
                sigma,
                n_tasks,
                smoothness,
                comparator_loss,
            } => {
                let a = accel(sigma, n_tasks);
                16.0 * diameter
                    * a
                    * (2.0 * smoothness * diameter * a + (smoothness * comparator_loss).sqrt())
            }
            TheoryBound::Eg {
                lipschitz,
                sigma,
                n_tasks,
                horizon,
                c,
                lambda,
            } => lipschitz * accel(sigma, n_tasks) * (2.0 * c * horizon as f64 / lambda).sqrt(),
        }
    }
}

pub fn theory_bound(kind: &TheoryBound) -> f64 {
    kind.value()
}

/// Constant-rate bound `B/η + m η Σ‖g‖⋆² / (2λ)`.
pub fn constant_rate_bound(
    budget: f64,
    max_inv_diag: f64,
    lambda: f64,
    eta: f64,
    sum_sq_grad: f64,
) -> f64 {
    budget / eta + max_inv_diag * eta * sum_sq_grad / (2.0 * lambda)
}

/// Bound for `η_t = c/√(Σ_{s≤t}‖g_s‖⋆²)`: `(R²/c + m c/λ)√(Σ‖g‖⋆²)`, where
/// `R²` bounds the divergence from any comparator to every iterate.
pub fn adaptive_rate_bound(
    max_divergence: f64,
    max_inv_diag: f64,
    lambda: f64,
    scale: f64,
    sum_sq_grad: f64,
) -> f64 {
    (max_divergence / scale + max_inv_diag * scale / lambda) * sum_sq_grad.sqrt()
}

/// Independent baseline `C√(NT)`.
pub fn independent_bound(c: f64, n_tasks: usize, horizon: usize) -> f64 {
    c * ((n_tasks * horizon) as f64).sqrt()
}
