//! Norms, regularizers and Bregman divergences for the three mirror
//! geometries: Euclidean, `p`-norm and negative entropy.

use serde::{Deserialize, Serialize};

use crate::compound::CompoundVector;
use crate::error::{Error, Result};

/// Tolerance on `|Σ x_j - 1|` for simplex membership.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Most negative entry still accepted as a simplex coordinate.
pub const SIMPLEX_NEG_TOL: f64 = -1e-12;
/// Floor applied to entropy coordinates before logs and divisions.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormTag {
    L1,
    L2,
    Linf,
    /// `ℓ_p` with `p ≥ 1`; build through [`NormTag::lp`].
    Lp(f64),
}

impl NormTag {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::param(format!("p-norm needs finite p >= 1, got {p}")));
        }
        Ok(NormTag::Lp(p))
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match *self {
            NormTag::L1 => x.iter().map(|v| v.abs()).sum(),
            NormTag::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormTag::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormTag::Lp(p) => lp_norm(x, p),
        }
    }

    /// Tag of the dual norm: `ℓ_p ↦ ℓ_q` with `1/p + 1/q = 1`.
    pub fn dual(&self) -> NormTag {
        match *self {
            NormTag::L1 => NormTag::Linf,
            NormTag::L2 => NormTag::L2,
            NormTag::Linf => NormTag::L1,
            NormTag::Lp(1.0) => NormTag::Linf,
            NormTag::Lp(p) => NormTag::Lp(conjugate_exponent(p)),
        }
    }
}

/// `q = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

pub fn norm(x: &[f64], tag: NormTag) -> f64 {
    tag.norm(x)
}

pub fn dual_norm_tag(tag: NormTag) -> NormTag {
    tag.dual()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_on_simplex(x: &[f64]) -> bool {
    let sum: f64 = x.iter().sum();
    (sum - 1.0).abs() <= SIMPLEX_SUM_TOL && x.iter().all(|&v| v >= SIMPLEX_NEG_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    AllSpace,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegularizerKind {
    /// `½‖x‖₂²`
    Euclidean,
    /// `½‖x‖_p²` with `1 < p ≤ 2`
    PNorm { p: f64 },
    /// `Σ_j x_j ln x_j` on the simplex
    NegEntropy,
}

/// A base regularizer `ψ` together with its strong-convexity data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    kind: RegularizerKind,
}

impl Regularizer {
    pub fn euclidean() -> Self {
        Self {
            kind: RegularizerKind::Euclidean,
        }
    }

    pub fn pnorm(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::param(format!(
                "p-norm regularizer needs 1 < p <= 2, got {p}"
            )));
        }
        Ok(Self {
            kind: RegularizerKind::PNorm { p },
        })
    }

    pub fn neg_entropy() -> Self {
        Self {
            kind: RegularizerKind::NegEntropy,
        }
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    /// Strong-convexity constant with respect to [`Self::primal_norm`].
    pub fn lambda(&self) -> f64 {
        match self.kind {
            RegularizerKind::Euclidean | RegularizerKind::NegEntropy => 1.0,
            RegularizerKind::PNorm { p } => p - 1.0,
        }
    }

    pub fn primal_norm(&self) -> NormTag {
        match self.kind {
            RegularizerKind::Euclidean => NormTag::L2,
            RegularizerKind::PNorm { p } => NormTag::Lp(p),
            RegularizerKind::NegEntropy => NormTag::L1,
        }
    }

    pub fn dual_norm(&self) -> NormTag {
        self.primal_norm().dual()
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            RegularizerKind::NegEntropy => Domain::Simplex,
            _ => Domain::AllSpace,
        }
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {bad}")));
        }
        if self.domain() == Domain::Simplex && !is_on_simplex(x) {
            let sum: f64 = x.iter().sum();
            return Err(Error::Domain(format!("not on the simplex (sum {sum})")));
        }
        Ok(())
    }

    pub fn psi_value(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        Ok(match self.kind {
            RegularizerKind::Euclidean => 0.5 * dot(x, x),
            RegularizerKind::PNorm { p } => {
                let n = lp_norm(x, p);
                0.5 * n * n
            }
            RegularizerKind::NegEntropy => x.iter().map(|&v| xlnx(v)).sum(),
        })
    }

    /// `∇ψ(x)`.
    pub fn mirror_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        Ok(match self.kind {
            RegularizerKind::Euclidean => x.to_vec(),
            RegularizerKind::PNorm { p } => pnorm_grad(x, p),
            RegularizerKind::NegEntropy => interior(x).into_iter().map(|v| 1.0 + v.ln()).collect(),
        })
    }

    /// `B_ψ(x, y) = ψ(x) - ψ(y) - ⟨∇ψ(y), x - y⟩`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: y.len(),
                found: x.len(),
            });
        }
        self.check_domain(x)?;
        self.check_domain(y)?;
        Ok(match self.kind {
            RegularizerKind::Euclidean => {
                0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            RegularizerKind::PNorm { p } => {
                let nx = lp_norm(x, p);
                let ny = lp_norm(y, p);
                let gy = pnorm_grad(y, p);
                let lin: f64 = gy
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                0.5 * nx * nx - 0.5 * ny * ny - lin
            }
            RegularizerKind::NegEntropy => {
                // Generalized KL; the mass terms cancel up to rounding on the simplex.
                let y = interior(y);
                let mut kl = 0.0;
                let (mut sx, mut sy) = (0.0, 0.0);
                for (&a, &b) in x.iter().zip(&y) {
                    let a = a.max(0.0);
                    if a > 0.0 {
                        kl += a * (a / b).ln();
                    }
                    sx += a;
                    sy += b;
                }
                kl - sx + sy
            }
        })
    }

    /// Sum of the blockwise divergences.
    pub fn compound_bregman(&self, x: &CompoundVector, y: &CompoundVector) -> Result<f64> {
        x.same_shape(y)?;
        x.blocks()
            .zip(y.blocks())
            .map(|(a, b)| self.bregman(a, b))
            .sum()
    }
}

fn xlnx(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

/// Clamp entries below at [`ENTROPY_FLOOR`] and renormalize.
pub(crate) fn interior(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|&v| v.max(ENTROPY_FLOOR)).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

fn pnorm_grad(x: &[f64], p: f64) -> Vec<f64> {
    let n = lp_norm(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    // sign(x_j) |x_j|^{p-1} ‖x‖^{2-p}, written scale-free as n·sign·(|x_j|/n)^{p-1}
    x.iter()
        .map(|&v| v.signum() * n * (v.abs() / n).powf(p - 1.0))
        .collect()
}
