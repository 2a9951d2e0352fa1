//! Learning-rate schedules and their theoretical tunings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate returned by [`adaptive_rate`] before any nonzero gradient was seen.
pub const ADAPTIVE_SENTINEL: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateSchedule {
    Constant(f64),
    /// `η_t = scale / √(Σ_{s≤t} ‖g_s‖⋆²)`.
    Adaptive {
        scale: f64,
        accumulated: f64,
    },
}

impl RateSchedule {
    pub fn constant(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::param(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        Ok(RateSchedule::Constant(eta))
    }

    pub fn adaptive(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param(format!(
                "adaptive scale must be positive, got {scale}"
            )));
        }
        Ok(RateSchedule::Adaptive {
            scale,
            accumulated: 0.0,
        })
    }

    /// The adaptive schedule with the multitask OGD scale `D√(N(N+1)(1+(N-1)σ²))`.
    pub fn adaptive_ogd(diameter: f64, n_tasks: usize, sigma: f64) -> Result<Self> {
        Self::adaptive(adaptive_scale(diameter, n_tasks, sigma))
    }

    /// Records `‖g_t‖⋆²` and returns `η_t`, or `None` when no step should be taken.
    pub fn observe(&mut self, dual_grad_sq: f64) -> Option<f64> {
        match self {
            RateSchedule::Constant(eta) => Some(*eta),
            RateSchedule::Adaptive { scale, accumulated } => {
                *accumulated += dual_grad_sq;
                if *accumulated > 0.0 {
                    Some(*scale / accumulated.sqrt())
                } else {
                    None
                }
            }
        }
    }

    /// Rate that the next step would use if it saw a zero gradient.
    pub fn current(&self) -> f64 {
        match *self {
            RateSchedule::Constant(eta) => eta,
            RateSchedule::Adaptive { scale, accumulated } => {
                if accumulated > 0.0 {
                    scale / accumulated.sqrt()
                } else {
                    ADAPTIVE_SENTINEL
                }
            }
        }
    }

    pub fn accumulated(&self) -> f64 {
        match *self {
            RateSchedule::Constant(_) => 0.0,
            RateSchedule::Adaptive { accumulated, .. } => accumulated,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, RateSchedule::Adaptive { .. })
    }
}

/// `1 + b(N-1)σ²/N`.
fn variance_factor(n: f64, sigma: f64, b: f64) -> f64 {
    1.0 + b * (n - 1.0) / n * sigma * sigma
}

/// `η = (ND/L) √((1 + b(N-1)σ²/N)(1+b) / ((b+N)T))`.
pub fn theory_rate_ogd(
    diameter: f64,
    lipschitz: f64,
    n_tasks: usize,
    sigma: f64,
    horizon: usize,
    b: f64,
) -> f64 {
    let n = n_tasks as f64;
    let t = horizon as f64;
    n * diameter / lipschitz * (variance_factor(n, sigma, b) * (1.0 + b) / ((b + n) * t)).sqrt()
}

/// `D√(N(N+1)(1+(N-1)σ²)) / (L√(2T))`, the `b = N` specialization.
pub fn headline_rate_ogd(
    diameter: f64,
    lipschitz: f64,
    n_tasks: usize,
    sigma: f64,
    horizon: usize,
) -> f64 {
    adaptive_scale(diameter, n_tasks, sigma) / (lipschitz * (2.0 * horizon as f64).sqrt())
}

/// Rate for `½‖·‖_p²` with `L` bounding `‖g‖_q`; twice the Euclidean
/// proof-form rate and scaled by `√(p-1)`.
pub fn theory_rate_pnorm(
    diameter: f64,
    lipschitz: f64,
    n_tasks: usize,
    sigma: f64,
    horizon: usize,
    b: f64,
    p: f64,
) -> f64 {
    2.0 * (p - 1.0).sqrt() * theory_rate_ogd(diameter, lipschitz, n_tasks, sigma, horizon, b)
}

/// `η = N√(2λ(1+b)C) / (L√((b+N)T))`.
pub fn theory_rate_eg(
    n_tasks: usize,
    lipschitz: f64,
    c: f64,
    lambda: f64,
    b: f64,
    horizon: usize,
) -> f64 {
    let n = n_tasks as f64;
    n * (2.0 * lambda * (1.0 + b) * c).sqrt() / (lipschitz * ((b + n) * horizon as f64).sqrt())
}

/// `D√(N(N+1)(1+(N-1)σ²))`.
pub fn adaptive_scale(diameter: f64, n_tasks: usize, sigma: f64) -> f64 {
    let n = n_tasks as f64;
    diameter * (n * (n + 1.0) * (1.0 + (n - 1.0) * sigma * sigma)).sqrt()
}

/// `η_t` for an accumulator that already includes the current gradient.
/// Returns [`ADAPTIVE_SENTINEL`] while the accumulator is zero.
pub fn adaptive_rate(accumulated: f64, diameter: f64, n_tasks: usize, sigma: f64) -> f64 {
    if accumulated > 0.0 {
        adaptive_scale(diameter, n_tasks, sigma) / accumulated.sqrt()
    } else {
        ADAPTIVE_SENTINEL
    }
}

/// `p = 2 ln d / (2 ln d - 1)` for `d ≥ 3`.
pub fn p_star_norm_choice(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::param(format!(
            "p-norm tuning needs d >= 3, got {dim}"
        )));
    }
    let q = 2.0 * (dim as f64).ln();
    Ok(q / (q - 1.0))
}

/// Constant rate minimizing `B/η + m η T L² / (2λ)`: `η = √(2λB / (m T L²))`.
pub fn constant_rate(
    budget: f64,
    max_inv_diag: f64,
    lambda: f64,
    horizon: usize,
    lipschitz: f64,
) -> f64 {
    (2.0 * lambda * budget / (max_inv_diag * horizon as f64 * lipschitz * lipschitz)).sqrt()
}

/// Adaptive scale `c` balancing `R²/c + m c / λ` with `R² = 4B`: `c = 2√(λB/m)`.
pub fn adaptive_scale_from_budget(budget: f64, max_inv_diag: f64, lambda: f64) -> f64 {
    2.0 * (lambda * budget / max_inv_diag).sqrt()
}
