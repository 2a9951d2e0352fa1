//! Activation schedules: which task is active at each round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleSpec {
    /// `i_t = t mod N`
    RoundRobin,
    /// Independent uniform draws.
    UniformRandom { seed: u64 },
    /// `block_len` consecutive rounds per task, cycling.
    Blocked { block_len: usize },
    /// Task indices come with the data.
    FromData,
}

/// The task sequence of length `horizon` over `n_tasks` tasks.
pub fn make_schedule(spec: ScheduleSpec, horizon: usize, n_tasks: usize) -> Result<Vec<usize>> {
    if n_tasks == 0 {
        return Err(Error::param("schedule needs at least one task"));
    }
    Ok(match spec {
        ScheduleSpec::RoundRobin => (0..horizon).map(|t| t % n_tasks).collect(),
        ScheduleSpec::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..horizon).map(|_| rng.random_range(0..n_tasks)).collect()
        }
        ScheduleSpec::Blocked { block_len } => {
            if block_len == 0 {
                return Err(Error::param("block length must be at least 1"));
            }
            (0..horizon).map(|t| (t / block_len) % n_tasks).collect()
        }
        ScheduleSpec::FromData => {
            return Err(Error::config(
                "a data-driven schedule is read from the dataset",
            ));
        }
    })
}
