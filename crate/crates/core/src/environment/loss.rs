//! Loss functions and their subgradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, NormTag};
use crate::learners::FeasibleSet;

/// Arguments of `-ln(wᵀx)` are clamped from below at this value.
pub const LOG_WEALTH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `(wᵀx - y)²`
    Square,
    /// `ln(1 + exp(-y wᵀx))`, `y ∈ {-1, +1}`
    Logistic,
    /// `-ln(wᵀx)` with price relatives `x > 0`
    LogWealth,
    /// `xᵀw`
    Linear,
}

impl LossKind {
    pub fn uses_label(&self) -> bool {
        matches!(self, LossKind::Square | LossKind::Logistic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossInstance {
    pub kind: LossKind,
    pub features: Vec<f64>,
    /// Ignored by [`LossKind::LogWealth`] and [`LossKind::Linear`].
    pub label: f64,
}

impl LossInstance {
    pub fn new(kind: LossKind, features: Vec<f64>, label: f64) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::param("loss features must be non-empty"));
        }
        if features.iter().any(|v| !v.is_finite()) || !label.is_finite() {
            return Err(Error::param("loss features and label must be finite"));
        }
        match kind {
            LossKind::LogWealth if features.iter().any(|&v| v <= 0.0) => {
                return Err(Error::param("price relatives must be strictly positive"));
            }
            LossKind::Logistic if label != 1.0 && label != -1.0 => {
                return Err(Error::param(format!(
                    "logistic labels must be -1 or +1, got {label}"
                )));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            features,
            label,
        })
    }

    pub fn square(features: Vec<f64>, label: f64) -> Result<Self> {
        Self::new(LossKind::Square, features, label)
    }

    pub fn logistic(features: Vec<f64>, label: f64) -> Result<Self> {
        Self::new(LossKind::Logistic, features, label)
    }

    pub fn log_wealth(price_relatives: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::LogWealth, price_relatives, 0.0)
    }

    pub fn linear(direction: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::Linear, direction, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    fn margin(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.features.len() {
            return Err(Error::Dimension {
                expected: self.features.len(),
                found: w.len(),
            });
        }
        Ok(dot(w, &self.features))
    }
}

/// `ℓ(w)`; log-wealth arguments below [`LOG_WEALTH_FLOOR`] are clamped.
pub fn loss_value(inst: &LossInstance, w: &[f64]) -> Result<f64> {
    let m = inst.margin(w)?;
    Ok(match inst.kind {
        LossKind::Square => (m - inst.label) * (m - inst.label),
        LossKind::Logistic => softplus(-inst.label * m),
        LossKind::LogWealth => -m.max(LOG_WEALTH_FLOOR).ln(),
        LossKind::Linear => m,
    })
}

/// A subgradient of `ℓ` at `w`, clamped like [`loss_value`].
pub fn loss_subgradient(inst: &LossInstance, w: &[f64]) -> Result<Vec<f64>> {
    let m = inst.margin(w)?;
    let scale = match inst.kind {
        LossKind::Square => 2.0 * (m - inst.label),
        LossKind::Logistic => -inst.label * sigmoid(-inst.label * m),
        LossKind::LogWealth => -1.0 / m.max(LOG_WEALTH_FLOOR),
        LossKind::Linear => 1.0,
    };
    Ok(inst.features.iter().map(|x| scale * x).collect())
}

/// True when the round needs the log-wealth clamp at `w`.
pub fn is_clamped(inst: &LossInstance, w: &[f64]) -> bool {
    inst.kind == LossKind::LogWealth
        && inst
            .margin(w)
            .map(|m| m <= LOG_WEALTH_FLOOR)
            .unwrap_or(false)
}

/// `sup_{w ∈ V} ‖∇ℓ(w)‖⋆` for a per-task set `V`.
pub fn dual_gradient_bound(inst: &LossInstance, set: &FeasibleSet, dual: NormTag) -> Result<f64> {
    let x = &inst.features;
    let xd = dual.norm(x);
    // sup_{w ∈ V} |wᵀx|
    let reach = match *set {
        FeasibleSet::NormBall { norm, radius } => radius * norm.dual().norm(x),
        FeasibleSet::Simplex => NormTag::Linf.norm(x),
        FeasibleSet::MahalanobisBall { .. } => {
            return Err(Error::Unsupported(
                "gradient bound over a compound ellipsoid".into(),
            ))
        }
    };
    Ok(match inst.kind {
        LossKind::Square => 2.0 * (reach + inst.label.abs()) * xd,
        LossKind::Logistic | LossKind::Linear => xd,
        LossKind::LogWealth => match set {
            FeasibleSet::Simplex => {
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                xd / lo
            }
            _ => xd / LOG_WEALTH_FLOOR,
        },
    })
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
