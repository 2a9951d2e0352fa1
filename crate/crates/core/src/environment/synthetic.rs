//! Controlled-variance task generators and the lower-bound construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::compound::CompoundVector;
use crate::error::{Error, Result};
use crate::geometry::{dot, NormTag};
use crate::variance::norm_variance;

use super::loss::LossInstance;
use super::Round;

const MAX_REDRAWS: usize = 1000;

/// Regression tasks `u_i = u₀ + ζ_i` with `Var_{ℓ2}(u) = spread²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub n_tasks: usize,
    pub dim: usize,
    /// `D`: every task vector lies in the Euclidean ball of this radius.
    pub radius: f64,
    pub center_norm: f64,
    pub spread: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    /// Centre at half the room left by the spread: `½(D - spread)`.
    pub fn new(
        n_tasks: usize,
        dim: usize,
        radius: f64,
        spread: f64,
        noise_std: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_tasks,
            dim,
            radius,
            center_norm: 0.5 * (radius - spread).max(0.0),
            spread,
            noise_std,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.dim == 0 {
            return Err(Error::param("synthetic tasks need N >= 1 and d >= 1"));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("center_norm", self.center_norm),
            ("spread", self.spread),
            ("noise_std", self.noise_std),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.radius > 0.0) {
            return Err(Error::param("radius must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub rounds: Vec<Round>,
    /// The generating task vectors.
    pub comparator: CompoundVector,
}

/// Draws task vectors, then square-loss rounds `y = u_{i_t}ᵀx + noise` with `x`
/// uniform on the unit sphere.
pub fn make_synthetic(
    spec: &SyntheticTaskSpec,
    horizon: usize,
    schedule: &[usize],
) -> Result<SyntheticStream> {
    spec.validate()?;
    check_schedule(schedule, horizon, spec.n_tasks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let comparator = draw_task_vectors(spec, &mut rng)?;
    let mut rounds = Vec::with_capacity(horizon);
    for (t, &i) in schedule.iter().enumerate() {
        let x = unit_vector(&mut rng, spec.dim);
        let noise: f64 = rng.sample(StandardNormal);
        let y = dot(comparator.block(i), &x) + spec.noise_std * noise;
        rounds.push(Round::new(t, i, LossInstance::square(x, y)?));
    }
    Ok(SyntheticStream { rounds, comparator })
}

fn draw_task_vectors(spec: &SyntheticTaskSpec, rng: &mut ChaCha8Rng) -> Result<CompoundVector> {
    let (n, d) = (spec.n_tasks, spec.dim);
    for _ in 0..MAX_REDRAWS {
        // Antithetic pairs keep the offsets exactly centred.
        let mut offsets = vec![vec![0.0; d]; n];
        for k in 0..n / 2 {
            let v = unit_vector(rng, d);
            offsets[2 * k] = v.iter().map(|x| -x).collect();
            offsets[2 * k + 1] = v;
        }
        offsets.shuffle(rng);
        let mut zeta = CompoundVector::from_blocks(&offsets)?;
        let raw = norm_variance(&zeta, NormTag::L2);
        let scale = if raw > 0.0 {
            spec.spread / raw.sqrt()
        } else {
            0.0
        };
        zeta.as_mut_slice().iter_mut().for_each(|v| *v *= scale);

        let center: Vec<f64> = unit_vector(rng, d)
            .into_iter()
            .map(|v| v * spec.center_norm)
            .collect();
        let mut u = zeta;
        for block in u.blocks_mut() {
            for (v, c) in block.iter_mut().zip(&center) {
                *v += c;
            }
        }
        if u.blocks()
            .all(|b| NormTag::L2.norm(b) <= spec.radius * (1.0 + 1e-12))
        {
            return Ok(u);
        }
    }
    Err(Error::param(format!(
        "cannot fit tasks with spread {} around a centre of norm {} inside radius {}",
        spec.spread, spec.center_norm, spec.radius
    )))
}

/// Tasks on the simplex with `Var_Δ ≤ σ²`, observed through square losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexTaskSpec {
    pub n_tasks: usize,
    pub dim: usize,
    pub sigma: f64,
    pub noise_std: f64,
    pub seed: u64,
}

/// `u_i ∝ u₀ ⊙ m_i` with multipliers `m_ij ∈ [1-ρ, 1]`, `ρ = 1 - √(1-σ)`,
/// which keeps every coordinate's min/max ratio above `1 - σ`. Features are
/// uniform on `[0,1]^d`.
pub fn make_simplex_tasks(
    spec: &SimplexTaskSpec,
    horizon: usize,
    schedule: &[usize],
) -> Result<SyntheticStream> {
    if spec.n_tasks == 0 || spec.dim == 0 {
        return Err(Error::param("simplex tasks need N >= 1 and d >= 1"));
    }
    if !(0.0..=1.0).contains(&spec.sigma) {
        return Err(Error::param(format!(
            "sigma must lie in [0, 1], got {}",
            spec.sigma
        )));
    }
    if !(spec.noise_std >= 0.0) {
        return Err(Error::param("noise_std must be nonnegative"));
    }
    check_schedule(schedule, horizon, spec.n_tasks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = dirichlet_point(&mut rng, spec.dim);
    let rho = 1.0 - (1.0 - spec.sigma).sqrt();
    let blocks: Vec<Vec<f64>> = (0..spec.n_tasks)
        .map(|_| {
            let mut b: Vec<f64> = base
                .iter()
                .map(|&v| v * (1.0 - rho * rng.random::<f64>()))
                .collect();
            let s: f64 = b.iter().sum();
            b.iter_mut().for_each(|v| *v /= s);
            b
        })
        .collect();
    let comparator = CompoundVector::from_blocks(&blocks)?;
    let mut rounds = Vec::with_capacity(horizon);
    for (t, &i) in schedule.iter().enumerate() {
        let x: Vec<f64> = (0..spec.dim).map(|_| rng.random::<f64>()).collect();
        let noise: f64 = rng.sample(StandardNormal);
        let y = dot(comparator.block(i), &x) + spec.noise_std * noise;
        rounds.push(Round::new(t, i, LossInstance::square(x, y)?));
    }
    Ok(SyntheticStream { rounds, comparator })
}

/// Output of [`make_lower_bound_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    /// `N = 2d` blocks `u₀ ∓ σ' e_i`.
    pub comparator: CompoundVector,
    /// `min_i ‖u_i‖₂²`.
    pub min_sq_norm: f64,
    /// Whether `min_i ‖u_i‖₂² ≥ 1 - 2σ²`; fails for small `d`.
    pub satisfies_norm_floor: bool,
}

/// `N = 2d` tasks around `u₀ = √(1-σ²) 𝟙/√d` with `Var_{ℓ2} = σ²`.
pub fn make_lower_bound_instance(dim: usize, sigma: f64) -> Result<LowerBoundInstance> {
    if dim == 0 {
        return Err(Error::param("dimension must be positive"));
    }
    if !(sigma > 0.0 && sigma < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::param(format!(
            "sigma must lie in (0, 1/sqrt 2), got {sigma}"
        )));
    }
    let n = 2 * dim;
    let u0 = vec![((1.0 - sigma * sigma) / dim as f64).sqrt(); dim];
    let s = sigma * ((n as f64 - 1.0) / n as f64).sqrt();
    let mut blocks = Vec::with_capacity(n);
    for i in 0..dim {
        let mut minus = u0.clone();
        minus[i] -= s;
        let mut plus = u0.clone();
        plus[i] += s;
        blocks.push(minus);
        blocks.push(plus);
    }
    let comparator = CompoundVector::from_blocks(&blocks)?;
    let min_sq_norm = comparator
        .blocks()
        .map(|b| dot(b, b))
        .fold(f64::INFINITY, f64::min);
    Ok(LowerBoundInstance {
        comparator,
        min_sq_norm,
        satisfies_norm_floor: min_sq_norm >= 1.0 - 2.0 * sigma * sigma,
    })
}

/// Linear losses whose gradient at task `i` is `-u_i/‖u_i‖₂`, so `L = 1`.
pub fn lower_bound_stream(instance: &LowerBoundInstance, schedule: &[usize]) -> Result<Vec<Round>> {
    let n = instance.comparator.n_tasks();
    check_schedule(schedule, schedule.len(), n)?;
    let directions: Vec<Vec<f64>> = instance
        .comparator
        .blocks()
        .map(|b| {
            let r = NormTag::L2.norm(b);
            b.iter().map(|v| -v / r).collect()
        })
        .collect();
    schedule
        .iter()
        .enumerate()
        .map(|(t, &i)| {
            Ok(Round::new(
                t,
                i,
                LossInstance::linear(directions[i].clone())?,
            ))
        })
        .collect()
}

fn check_schedule(schedule: &[usize], horizon: usize, n_tasks: usize) -> Result<()> {
    if schedule.len() != horizon {
        return Err(Error::Dimension {
            expected: horizon,
            found: schedule.len(),
        });
    }
    if let Some(&bad) = schedule.iter().find(|&&i| i >= n_tasks) {
        return Err(Error::TaskIndex {
            index: bad,
            n_tasks,
        });
    }
    Ok(())
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let r = NormTag::L2.norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

fn dirichlet_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}
