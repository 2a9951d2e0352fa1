//! Quick invariant checks run by `mtomd selftest`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compound::CompoundVector;
use crate::environment::{batch_comparator, loss_subgradient, loss_value, LossInstance};
use crate::error::Result;
use crate::geometry::{NormTag, Regularizer};
use crate::harness::config::{EnvironmentKind, LearnerKind, RunConfig};
use crate::harness::run_experiment;
use crate::interaction::{clique_max_inv_diag, GraphSpec, InteractionOperator, Which};
use crate::learners::{FeasibleSet, Learner, LearnerConfig, RateSchedule, UpdateRule};
use crate::variance::norm_variance;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<(bool, String)>;

/// Runs every check with a fixed seed.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 7] = [
        ("clique closed forms", clique_closed_forms),
        ("graph inverse stochasticity", graph_stochasticity),
        ("clique Bregman identity", bregman_identity),
        ("independent learners at A = I", identity_equivalence),
        ("finite-difference gradients", finite_differences),
        ("batch comparator optimality", comparator_optimality),
        ("run determinism", determinism),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    checks
        .iter()
        .map(|&(name, f)| match f(&mut rng) {
            Ok((passed, detail)) => Check {
                name,
                passed,
                detail,
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn clique_closed_forms(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in [1usize, 2, 4, 8, 16] {
        for b in [0.0, 0.5, 1.0, n as f64, 10.0 * n as f64] {
            let op = InteractionOperator::clique(n, b)?;
            let a = op.matrix(Which::A);
            for (which, f) in [
                (Which::Sqrt, f64::sqrt as fn(f64) -> f64),
                (Which::Inv, |x: f64| 1.0 / x),
                (Which::InvSqrt, |x: f64| 1.0 / x.sqrt()),
            ] {
                worst = worst.max((op.matrix(which) - sym_fn(a, f)).amax());
            }
            let diag = sym_fn(a, |x| 1.0 / x).diagonal().max();
            worst = worst.max((clique_max_inv_diag(n, b) - diag).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max deviation {worst:.2e}")))
}

fn graph_stochasticity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (mut min_entry, mut row_err) = (f64::INFINITY, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < 0.5 {
                    edges.push((i, j, rng.random_range(0.01..5.0)));
                }
            }
        }
        let op = InteractionOperator::laplacian(&GraphSpec::from_edges(n, &edges)?)?;
        for which in [Which::Inv, Which::InvSqrt] {
            let m = op.matrix(which);
            min_entry = min_entry.min(m.min());
            for r in m.row_iter() {
                row_err = row_err.max((r.sum() - 1.0).abs());
            }
        }
    }
    let ok = min_entry >= -1e-12 && row_err <= 1e-10;
    Ok((
        ok,
        format!("min entry {min_entry:.2e}, row-sum error {row_err:.2e}"),
    ))
}

fn bregman_identity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let reg = Regularizer::euclidean();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=5);
        let b = rng.random_range(0.0..20.0);
        let u = CompoundVector::new(
            n,
            d,
            (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )?;
        let op = InteractionOperator::clique(n, b)?;
        let au = op.apply_block(Which::Sqrt, &u)?;
        let lhs = 2.0 * reg.compound_bregman(&au, &CompoundVector::zeros(n, d))?;
        let rhs = u.norm2_sq() + b * (n as f64 - 1.0) * norm_variance(&u, NormTag::L2);
        worst = worst.max((lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE));
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.2e}")))
}

fn identity_equivalence(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (n, d) = (4, 3);
    let ball = FeasibleSet::norm_ball(NormTag::L2, 1.0)?;
    let rate = RateSchedule::constant(0.1)?;
    let multi = LearnerConfig::new(
        Regularizer::euclidean(),
        InteractionOperator::clique(n, 0.0)?,
        ball,
        rate,
        1.0,
    )?;
    let single = LearnerConfig::new(
        Regularizer::euclidean(),
        InteractionOperator::identity(1)?,
        ball,
        rate,
        1.0,
    )?;
    let mut mt = Learner::with_rule(multi, UpdateRule::Ogd, d)?;
    let mut ind: Vec<Learner> = (0..n)
        .map(|_| Learner::with_rule(single.clone(), UpdateRule::Ogd, d))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let i = rng.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        mt.update(i, &g)?;
        ind[i].update(0, &g)?;
        for (k, l) in ind.iter().enumerate() {
            let a = mt.predict(k)?;
            let b = l.predict(0)?;
            worst = a
                .iter()
                .zip(&b)
                .fold(worst, |m, (x, y)| m.max((x - y).abs()));
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn finite_differences(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let h = 1e-6;
    let mut worst = 0.0f64;
    let d = 4;
    for _ in 0..50 {
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
        let losses = [
            LossInstance::square(x.clone(), rng.random_range(-1.0..1.0))?,
            LossInstance::logistic(x.clone(), if rng.random::<bool>() { 1.0 } else { -1.0 })?,
            LossInstance::log_wealth(x.clone())?,
            LossInstance::linear(x.clone())?,
        ];
        for l in &losses {
            let g = loss_subgradient(l, &w)?;
            for j in 0..d {
                let (mut p, mut m) = (w.clone(), w.clone());
                p[j] += h;
                m[j] -= h;
                let fd = (loss_value(l, &p)? - loss_value(l, &m)?) / (2.0 * h);
                worst = worst.max(rel_err(g[j], fd));
            }
        }
        let s: f64 = w.iter().sum();
        let on_simplex: Vec<f64> = w.iter().map(|v| v / s).collect();
        for reg in [
            Regularizer::euclidean(),
            Regularizer::pnorm(1.5)?,
            Regularizer::neg_entropy(),
        ] {
            let g = reg.mirror_grad(&on_simplex)?;
            // directions e_j - e_0 stay on the simplex
            for j in 1..d {
                let (mut p, mut m) = (on_simplex.clone(), on_simplex.clone());
                p[j] += h;
                p[0] -= h;
                m[j] -= h;
                m[0] += h;
                let fd = (reg.psi_value(&p)? - reg.psi_value(&m)?) / (2.0 * h);
                worst = worst.max(rel_err(g[j] - g[0], fd));
            }
        }
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.2e}")))
}

fn comparator_optimality(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let d = 3;
    let losses: Vec<LossInstance> = (0..40)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            LossInstance::square(x, rng.random_range(-1.0..1.0))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&LossInstance> = losses.iter().collect();
    let ball = FeasibleSet::norm_ball(NormTag::L2, 0.5)?;
    let best = batch_comparator(&refs, &ball, d)?;
    let mut violations = 0;
    for _ in 0..500 {
        let mut w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        ball.project_block(&mut w)?;
        let v: f64 = refs
            .iter()
            .map(|l| loss_value(l, &w))
            .sum::<Result<f64>>()?;
        if v < best.value - 1e-9 {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{violations} random points beat the comparator"),
    ))
}

fn determinism(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut c = RunConfig::new(LearnerKind::MtOgd, EnvironmentKind::Synthetic);
    c.n_tasks = Some(4);
    c.dim = Some(3);
    c.horizon = Some(300);
    c.sigma = 0.3;
    c.noise_std = 0.1;
    c.seed = 11;
    let a = run_experiment(&c)?;
    let b = run_experiment(&c)?;
    let same = a.cumulative_loss == b.cumulative_loss && a.regret == b.regret && a.bound == b.bound;
    Ok((same, format!("final regret {:.6e}", a.final_regret)))
}
