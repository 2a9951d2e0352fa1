//! Fixtures shared by the update benchmarks.

use mtomd_core::environment::{
    make_schedule, make_synthetic, Round, ScheduleSpec, SyntheticTaskSpec,
};
use mtomd_core::{FeasibleSet, InteractionOperator, LearnerConfig, RateSchedule, Regularizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clique-coupled OGD on a Mahalanobis ball.
pub fn ogd_config(n_tasks: usize, b: f64) -> LearnerConfig {
    LearnerConfig::new(
        Regularizer::euclidean(),
        InteractionOperator::clique(n_tasks, b).expect("valid clique"),
        FeasibleSet::mahalanobis(4.0).expect("valid radius"),
        RateSchedule::constant(0.1).expect("valid rate"),
        1.0,
    )
    .expect("compatible configuration")
}

/// Clique-coupled EG on the simplex.
pub fn eg_config(n_tasks: usize, b: f64) -> LearnerConfig {
    LearnerConfig::new(
        Regularizer::neg_entropy(),
        InteractionOperator::clique(n_tasks, b).expect("valid clique"),
        FeasibleSet::Simplex,
        RateSchedule::constant(0.1).expect("valid rate"),
        1.0,
    )
    .expect("compatible configuration")
}

/// `count` (task, gradient) pairs with uniform tasks and entries in `[-1, 1]`.
pub fn gradients(n_tasks: usize, dim: usize, count: usize, seed: u64) -> Vec<(usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (rng.random_range(0..n_tasks), g)
        })
        .collect()
}

/// A synthetic square-loss stream with round-robin activations.
pub fn stream(n_tasks: usize, dim: usize, horizon: usize) -> Vec<Round> {
    let schedule =
        make_schedule(ScheduleSpec::RoundRobin, horizon, n_tasks).expect("valid schedule");
    let spec = SyntheticTaskSpec::new(n_tasks, dim, 1.0, 0.2, 0.05, 7);
    make_synthetic(&spec, horizon, &schedule)
        .expect("valid spec")
        .rounds
}
