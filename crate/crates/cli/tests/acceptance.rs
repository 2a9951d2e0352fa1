//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines are always printed; exits nonzero if any criterion fails.

// A NaN regret must fail the strict comparisons below.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use mtomd_core::environment::{loss_subgradient, loss_value, LossInstance};
use mtomd_core::harness::config::{
    EnvironmentKind, FeasibleChoice, LearnerKind, RunConfig, TuningKind,
};
use mtomd_core::harness::{run_experiment, RegretReport};
use mtomd_core::interaction::clique_max_inv_diag;
use mtomd_core::learners::{step_eg, step_generic, step_ogd};
use mtomd_core::{
    CompoundVector, FeasibleSet, GraphSpec, InteractionOperator, Learner, LearnerConfig,
    LearnerState, NormTag, RateSchedule, Regularizer, UpdateRule, Which,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `f(M)` through an eigendecomposition of the symmetric matrix `M`.
fn spectral(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f))
        * eig.eigenvectors.transpose()
}

fn clique_identities() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1usize, 2, 4, 8, 16] {
        let nf = n as f64;
        for b in [0.0, 0.5, 1.0, nf, 10.0 * nf] {
            // A(b) = (1+b)I - (b/N)11ᵀ assembled entrywise
            let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + b } else { 0.0 } - b / nf);
            let op = InteractionOperator::clique(n, b).map_err(|e| e.to_string())?;
            worst = worst.max((op.matrix(Which::A) - &a).amax());
            worst = worst.max((op.matrix(Which::Sqrt) - spectral(&a, f64::sqrt)).amax());
            worst = worst.max((op.matrix(Which::Inv) - spectral(&a, |x| 1.0 / x)).amax());
            worst =
                worst.max((op.matrix(Which::InvSqrt) - spectral(&a, |x| 1.0 / x.sqrt())).amax());
            let diag = spectral(&a, |x| 1.0 / x).diagonal().max();
            worst = worst.max((clique_max_inv_diag(n, b) - diag).abs());
            worst = worst.max((op.max_inv_diag() - (b + nf) / ((1.0 + b) * nf)).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:.2e}"))
}

fn stochasticity() -> Outcome {
    let mut r = rng(2);
    let (mut min_entry, mut row_err) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let n = r.random_range(1..=10);
        let density = r.random_range(0.1..1.0);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if r.random::<f64>() < density {
                    edges.push((i, j, r.random_range(0.001..10.0)));
                }
            }
        }
        let graph = GraphSpec::from_edges(n, &edges).map_err(|e| e.to_string())?;
        let op = InteractionOperator::laplacian(&graph).map_err(|e| e.to_string())?;
        // recompute from the weights rather than trusting the operator
        let mut a = DMatrix::<f64>::identity(n, n);
        for &(i, j, w) in &edges {
            a[(i, i)] += w;
            a[(j, j)] += w;
            a[(i, j)] -= w;
            a[(j, i)] -= w;
        }
        for (which, oracle) in [
            (Which::Inv, spectral(&a, |x| 1.0 / x)),
            (Which::InvSqrt, spectral(&a, |x| 1.0 / x.sqrt())),
        ] {
            let m = op.matrix(which);
            if (m - &oracle).amax() > 1e-9 {
                return Err(format!(
                    "{which} disagrees with the oracle by {:.2e}",
                    (m - &oracle).amax()
                ));
            }
            min_entry = min_entry.min(m.min());
            for row in m.row_iter() {
                row_err = row_err.max((row.sum() - 1.0).abs());
            }
        }
    }
    ensure(
        min_entry >= -1e-12 && row_err <= 1e-10,
        format!("min entry {min_entry:.2e}, max row-sum error {row_err:.2e}"),
    )
}

fn bregman_identity() -> Outcome {
    let mut r = rng(3);
    let reg = Regularizer::euclidean();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(1..=12);
        let d = r.random_range(1..=6);
        let b = if r.random::<bool>() {
            r.random_range(0.0..2.0)
        } else {
            r.random_range(0.0..100.0)
        };
        let data: Vec<f64> = (0..n * d).map(|_| r.random_range(-3.0..3.0)).collect();
        let u = CompoundVector::new(n, d, data).unwrap();
        let op = InteractionOperator::clique(n, b).unwrap();
        let lhs = 2.0
            * reg
                .compound_bregman(
                    &op.apply_block(Which::Sqrt, &u).unwrap(),
                    &CompoundVector::zeros(n, d),
                )
                .unwrap();
        let mean: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| u.block(i)[j]).sum::<f64>() / n as f64)
            .collect();
        let spread: f64 = (0..n)
            .map(|i| {
                u.block(i)
                    .iter()
                    .zip(&mean)
                    .map(|(a, m)| (a - m) * (a - m))
                    .sum::<f64>()
            })
            .sum();
        // b(N-1)Var with Var = spread/(N-1)
        let rhs = u.as_slice().iter().map(|v| v * v).sum::<f64>() + b * spread;
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    ensure(
        worst < 1e-10,
        format!("max relative error {worst:.2e} over 1000 samples"),
    )
}

fn ogd_config(n: usize, feasible: FeasibleSet, eta: f64) -> LearnerConfig {
    let op = InteractionOperator::clique(n, 0.0).unwrap();
    LearnerConfig::new(
        Regularizer::euclidean(),
        op,
        feasible,
        RateSchedule::constant(eta).unwrap(),
        1.0,
    )
    .unwrap()
}

fn equivalence_at_identity() -> Outcome {
    let (n, d, eta, rounds) = (6usize, 4usize, 0.3, 1000);
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let max = |worst: &mut f64, a: &[f64], b: &[f64]| {
        for (x, y) in a.iter().zip(b) {
            *worst = worst.max((x - y).abs());
        }
    };

    // per-task Euclidean balls
    let radius = 0.7;
    let ball = FeasibleSet::norm_ball(NormTag::L2, radius).unwrap();
    let mut mt = Learner::new(ogd_config(n, ball, eta), d).unwrap();
    let mut plain = vec![vec![0.0; d]; n];
    // an ellipsoid that never binds reduces to unconstrained OGD
    let loose = FeasibleSet::mahalanobis(1e12).unwrap();
    let mut mt_loose = Learner::new(ogd_config(n, loose, eta), d).unwrap();
    let mut free = vec![vec![0.0; d]; n];
    for _ in 0..rounds {
        let i = r.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        mt.update(i, &g).unwrap();
        mt_loose.update(i, &g).unwrap();
        for ((w, f), gj) in plain[i].iter_mut().zip(free[i].iter_mut()).zip(&g) {
            *w -= eta * gj;
            *f -= eta * gj;
        }
        let norm = plain[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            plain[i].iter_mut().for_each(|v| *v *= radius / norm);
        }
        for k in 0..n {
            max(&mut worst, &mt.predict(k).unwrap(), &plain[k]);
            max(&mut worst, &mt_loose.predict(k).unwrap(), &free[k]);
        }
    }
    let ogd_worst = worst;

    let eg_config = LearnerConfig::new(
        Regularizer::neg_entropy(),
        InteractionOperator::clique(n, 0.0).unwrap(),
        FeasibleSet::Simplex,
        RateSchedule::constant(eta).unwrap(),
        1.0,
    )
    .unwrap();
    let mut mt = Learner::with_rule(eg_config, UpdateRule::Eg, d).unwrap();
    let mut plain = vec![vec![1.0 / d as f64; d]; n];
    worst = 0.0;
    for _ in 0..rounds {
        let i = r.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        mt.update(i, &g).unwrap();
        let w = &mut plain[i];
        for (v, gj) in w.iter_mut().zip(&g) {
            *v *= (-eta * gj).exp();
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        for (k, p) in plain.iter().enumerate() {
            max(&mut worst, &mt.predict(k).unwrap(), p);
        }
    }
    ensure(
        ogd_worst <= 1e-12 && worst <= 1e-12,
        format!("OGD max deviation {ogd_worst:.2e}, EG max deviation {worst:.2e}"),
    )
}

fn synthetic(learner: LearnerKind, n: usize, sigma: f64, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(learner, EnvironmentKind::Synthetic);
    c.n_tasks = Some(n);
    c.dim = Some(5);
    c.horizon = Some(10_000);
    c.diameter = 1.0;
    c.sigma = sigma;
    c.noise_std = 0.05;
    c.seed = seed;
    c
}

fn simplex_stream(learner: LearnerKind, n: usize, d: usize, sigma: f64, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(learner, EnvironmentKind::Simplex);
    c.n_tasks = Some(n);
    c.dim = Some(d);
    c.horizon = Some(10_000);
    c.sigma = sigma;
    c.noise_std = 0.05;
    c.seed = seed;
    c
}

fn run(c: &RunConfig) -> Result<RegretReport, String> {
    run_experiment(c).map_err(|e| format!("run failed: {e}"))
}

fn accel(sigma: f64, n: usize) -> f64 {
    (1.0 + sigma * sigma * (n as f64 - 1.0)).sqrt()
}

fn ogd_bound_check() -> Outcome {
    let mut worst_ratio = 0.0f64;
    for n in [4usize, 16] {
        for sigma in [0.0, 0.1, 0.5, 1.0] {
            for seed in 0..3 {
                let rep = run(&synthetic(LearnerKind::MtOgd, n, sigma, seed))?;
                let bound = rep.lipschitz * accel(sigma, n) * (2.0 * 10_000f64).sqrt();
                let ratio = rep.final_regret / bound;
                worst_ratio = worst_ratio.max(ratio);
                if ratio > 1.0 {
                    return Err(format!(
                        "N={n} σ={sigma} seed={seed}: R_T {:.3} > bound {bound:.3}",
                        rep.final_regret
                    ));
                }
            }
        }
    }
    Ok(format!("24 cells, max R_T / bound = {worst_ratio:.3}"))
}

fn eg_bound_check() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut cells = 0;
    for d in [5usize, 20] {
        for sigma in [0.1, 0.3, 0.6, 1.0] {
            for seed in 0..3 {
                let c = simplex_stream(LearnerKind::MtEg, 10, d, sigma, seed);
                let rep = run(&c)?;
                let b = (1.0 - sigma * sigma) / (sigma * sigma);
                if (rep.b - b).abs() > 1e-9 * b.max(1.0) {
                    return Err(format!("b = {} instead of {b}", rep.b));
                }
                let bound =
                    rep.lipschitz * accel(sigma, 10) * (2.0 * 10_000.0 * (d as f64).ln()).sqrt();
                let ratio = rep.final_regret / bound;
                worst_ratio = worst_ratio.max(ratio);
                cells += 1;
                if ratio > 1.0 {
                    return Err(format!(
                        "d={d} σ={sigma} seed={seed}: R_T {:.3} > bound {bound:.3}",
                        rep.final_regret
                    ));
                }
            }
        }
    }
    Ok(format!("{cells} cells, max R_T / bound = {worst_ratio:.3}"))
}

fn adaptive_bound_check() -> Outcome {
    let mut worst_ratio = 0.0f64;
    for n in [4usize, 16] {
        for sigma in [0.0, 0.1, 0.5, 1.0] {
            for seed in 0..3 {
                let mut c = synthetic(LearnerKind::MtOgd, n, sigma, seed);
                c.tuning = TuningKind::Adaptive;
                c.feasible = Some(FeasibleChoice::Mahalanobis);
                let rep = run(&c)?;
                let bound = 8.0 * accel(sigma, n) * rep.sum_sq_grad.sqrt();
                let ratio = rep.final_regret / bound;
                worst_ratio = worst_ratio.max(ratio);
                if ratio > 1.0 {
                    return Err(format!(
                        "N={n} σ={sigma} seed={seed}: R_T {:.3} > bound {bound:.3}",
                        rep.final_regret
                    ));
                }
            }
        }
    }
    Ok(format!("24 cells, max R_T / bound = {worst_ratio:.3}"))
}

fn variance_acceleration() -> Outcome {
    let mut lines = Vec::new();
    for seed in 0..3 {
        let mt = run(&synthetic(LearnerKind::MtOgd, 16, 0.1, seed))?.final_regret;
        let ind = run(&synthetic(LearnerKind::IOgd, 16, 0.1, seed))?.final_regret;
        if !(mt < ind) {
            return Err(format!("seed {seed}: MT-OGD {mt:.3} >= I-OGD {ind:.3}"));
        }
        let mt_eg = run(&simplex_stream(LearnerKind::MtEg, 16, 10, 0.1, seed))?.final_regret;
        let ind_eg = run(&simplex_stream(LearnerKind::IEg, 16, 10, 0.1, seed))?.final_regret;
        if !(mt_eg < ind_eg) {
            return Err(format!("seed {seed}: MT-EG {mt_eg:.3} >= I-EG {ind_eg:.3}"));
        }
        lines.push(format!("OGD {mt:.1}<{ind:.1}, EG {mt_eg:.2}<{ind_eg:.2}"));
    }
    Ok(lines.join("; "))
}

fn lower_bound_regime() -> Outcome {
    let (n, sigma, t) = (32usize, 0.1, 10_000usize);
    let s2 = sigma * sigma;
    let limit = (n as f64 - 16.0) / (18.0 * n as f64);
    if s2 > limit {
        return Err(format!("σ² = {s2} outside the regime (limit {limit})"));
    }
    let mut c = RunConfig::new(LearnerKind::IOgd, EnvironmentKind::LowerBound);
    c.n_tasks = Some(n);
    c.horizon = Some(t);
    c.sigma = sigma;
    let rep = run(&c)?;
    if (rep.lipschitz - 1.0).abs() > 1e-12 {
        return Err(format!("gradient bound {} instead of 1", rep.lipschitz));
    }
    // D = 1, L = 1
    let mt_bound = accel(sigma, n) * (2.0 * t as f64).sqrt();
    ensure(
        rep.final_regret > mt_bound,
        format!(
            "I-OGD regret {:.2} vs multitask bound {mt_bound:.2}",
            rep.final_regret
        ),
    )
}

fn random_simplex(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn generic_agreement() -> Outcome {
    let mut r = rng(10);
    let (mut ogd_worst, mut eg_worst) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let n = r.random_range(1..=6);
        let d = r.random_range(1..=5);
        let b = if k % 4 == 0 {
            0.0
        } else {
            r.random_range(0.0..10.0)
        };
        let op = InteractionOperator::clique(n, b).unwrap();
        let feasible = if b == 0.0 && k % 8 == 0 {
            FeasibleSet::norm_ball(NormTag::L2, r.random_range(0.2..2.0)).unwrap()
        } else {
            FeasibleSet::mahalanobis(r.random_range(0.1..5.0)).unwrap()
        };
        let eta = r.random_range(0.01..1.0);
        let cfg = LearnerConfig::new(
            Regularizer::euclidean(),
            op.clone(),
            feasible,
            RateSchedule::constant(eta).unwrap(),
            1.0,
        )
        .unwrap();
        let mut x = CompoundVector::new(
            n,
            d,
            (0..n * d).map(|_| r.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        feasible.project(&mut x, &op).unwrap();
        let start = LearnerState::from_x(&cfg, &x).unwrap();
        let i = r.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let (mut a, mut c) = (start.clone(), start);
        step_ogd(&mut a, &cfg, i, &g).map_err(|e| e.to_string())?;
        step_generic(&mut c, &cfg, i, &g).map_err(|e| e.to_string())?;
        ogd_worst = ogd_worst.max(a.x(&op).unwrap().max_abs_diff(&c.x(&op).unwrap()));
    }
    for _ in 0..100 {
        let n = r.random_range(1..=6);
        let d = r.random_range(2..=5);
        let b = r.random_range(0.0..20.0);
        let op = InteractionOperator::clique(n, b).unwrap();
        let eta = r.random_range(0.01..1.0);
        let cfg = LearnerConfig::new(
            Regularizer::neg_entropy(),
            op,
            FeasibleSet::Simplex,
            RateSchedule::constant(eta).unwrap(),
            1.0,
        )
        .unwrap();
        let blocks: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut r, d)).collect();
        let start = LearnerState {
            y: CompoundVector::from_blocks(&blocks).unwrap(),
            t: 0,
            rate: cfg.rate,
        };
        let i = r.random_range(0..n);
        let g: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let (mut a, mut c) = (start.clone(), start);
        step_eg(&mut a, &cfg, i, &g).map_err(|e| e.to_string())?;
        step_generic(&mut c, &cfg, i, &g).map_err(|e| e.to_string())?;
        eg_worst = eg_worst.max(a.y.max_abs_diff(&c.y));
    }
    ensure(
        ogd_worst <= 1e-6 && eg_worst <= 1e-6,
        format!("OGD max deviation {ogd_worst:.2e}, EG max deviation {eg_worst:.2e}"),
    )
}

/// `‖a - b‖∞ / ‖a‖∞`.
fn normwise(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn central_diff(f: impl Fn(&[f64]) -> f64, w: &[f64], dirs: &[Vec<f64>]) -> Vec<f64> {
    let h = 1e-5;
    dirs.iter()
        .map(|v| {
            let p: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + h * b).collect();
            let m: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - h * b).collect();
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

fn unit_dirs(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|j| (0..d).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn gradient_suite() -> Outcome {
    let mut r = rng(11);
    let mut worst = 0.0f64;
    let mut probes = 0;
    for kind in 0..4 {
        for _ in 0..1000 {
            let d = r.random_range(1..=8);
            let (loss, w) = match kind {
                0 => {
                    let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                    let w: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                    (
                        LossInstance::square(x, r.random_range(-2.0..2.0)).unwrap(),
                        w,
                    )
                }
                1 => {
                    let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                    let w: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
                    let y = if r.random::<bool>() { 1.0 } else { -1.0 };
                    (LossInstance::logistic(x, y).unwrap(), w)
                }
                2 => {
                    let x: Vec<f64> = (0..d).map(|_| r.random_range(0.5..1.5)).collect();
                    (
                        LossInstance::log_wealth(x).unwrap(),
                        random_simplex(&mut r, d),
                    )
                }
                _ => {
                    let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                    let w: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                    (LossInstance::linear(x).unwrap(), w)
                }
            };
            let g = loss_subgradient(&loss, &w).unwrap();
            let fd = central_diff(|v| loss_value(&loss, v).unwrap(), &w, &unit_dirs(d));
            worst = worst.max(normwise(&g, &fd));
            probes += 1;
        }
    }
    for _ in 0..1000 {
        let d = r.random_range(1..=8);
        let x: Vec<f64> = (0..d)
            .map(|_| r.random_range(0.1..2.0) * if r.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        for reg in [
            Regularizer::euclidean(),
            Regularizer::pnorm(r.random_range(1.1..=2.0)).unwrap(),
        ] {
            let g = reg.mirror_grad(&x).unwrap();
            let fd = central_diff(|v| reg.psi_value(v).unwrap(), &x, &unit_dirs(d));
            worst = worst.max(normwise(&g, &fd));
            probes += 1;
        }
        // entropy lives on the simplex: differentiate along e_j - e_0
        let d = d.max(2);
        let p = random_simplex(&mut r, d);
        let reg = Regularizer::neg_entropy();
        let g = reg.mirror_grad(&p).unwrap();
        let dirs: Vec<Vec<f64>> = (1..d)
            .map(|j| {
                (0..d)
                    .map(|k| {
                        if k == j {
                            1.0
                        } else if k == 0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let tangent: Vec<f64> = (1..d).map(|j| g[j] - g[0]).collect();
        let fd = central_diff(|v| reg.psi_value(v).unwrap(), &p, &dirs);
        worst = worst.max(normwise(&tangent, &fd));
        probes += 1;
    }
    ensure(
        worst < 1e-6,
        format!("max relative error {worst:.2e} over {probes} probes"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "name = \"det\"\nlearner = \"mt-ogd\"\nenvironment = \"synthetic\"\nn_tasks = 8\ndim = 4\n\
         horizon = 2000\nsigma = 0.2\nnoise_std = 0.1\nschedule = \"uniform\"\nseed = 42\n",
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mtomd"))
            .arg("run")
            .arg(&config)
            .arg("-o")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "mtomd run failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(
        outputs[0] == outputs[1] && !outputs[0].is_empty(),
        format!(
            "{} bytes, identical: {}",
            outputs[0].len(),
            outputs[0] == outputs[1]
        ),
    )
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "clique closed-form identities",
            limit: Duration::from_secs(1),
            check: clique_identities,
        },
        Criterion {
            id: 2,
            name: "graph inverse stochasticity",
            limit: Duration::from_secs(5),
            check: stochasticity,
        },
        Criterion {
            id: 3,
            name: "clique Bregman identity",
            limit: Duration::from_secs(2),
            check: bregman_identity,
        },
        Criterion {
            id: 4,
            name: "equivalence at A = I",
            limit: Duration::from_secs(5),
            check: equivalence_at_identity,
        },
        Criterion {
            id: 5,
            name: "multitask OGD bound",
            limit: Duration::from_secs(60),
            check: ogd_bound_check,
        },
        Criterion {
            id: 6,
            name: "multitask EG bound",
            limit: Duration::from_secs(60),
            check: eg_bound_check,
        },
        Criterion {
            id: 7,
            name: "adaptive OGD bound",
            limit: Duration::from_secs(60),
            check: adaptive_bound_check,
        },
        Criterion {
            id: 8,
            name: "variance acceleration",
            limit: Duration::from_secs(120),
            check: variance_acceleration,
        },
        Criterion {
            id: 9,
            name: "lower-bound regime",
            limit: Duration::from_secs(60),
            check: lower_bound_regime,
        },
        Criterion {
            id: 10,
            name: "generic solver agreement",
            limit: Duration::from_secs(30),
            check: generic_agreement,
        },
        Criterion {
            id: 11,
            name: "finite-difference gradients",
            limit: Duration::from_secs(10),
            check: gradient_suite,
        },
        Criterion {
            id: 12,
            name: "byte-identical reruns",
            limit: Duration::from_secs(60),
            check: determinism,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| c.name.contains(f.as_str()) || c.id.to_string() == *f)
        {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded the {:?} budget", c.limit)),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {} ({:.2} s): {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
