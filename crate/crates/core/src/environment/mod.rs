//! Loss streams: loss functions, activation schedules, synthetic generators,
//! CSV ingestion and batch comparators.

pub mod comparator;
pub mod csv;
pub mod loss;
pub mod schedule;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::NormTag;
use crate::learners::FeasibleSet;

pub use self::csv::{load_csv, CsvDataset, CsvSchema};
pub use comparator::{batch_comparator, batch_comparators, BatchComparator};
pub use loss::{
    dual_gradient_bound, is_clamped, loss_subgradient, loss_value, LossInstance, LossKind,
};
pub use schedule::{make_schedule, ScheduleSpec};
pub use synthetic::{
    lower_bound_stream, make_lower_bound_instance, make_simplex_tasks, make_synthetic,
    LowerBoundInstance, SimplexTaskSpec, SyntheticStream, SyntheticTaskSpec,
};

/// One adversarial event: the active task and its loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub t: usize,
    pub active_task: usize,
    pub loss: LossInstance,
}

impl Round {
    pub fn new(t: usize, active_task: usize, loss: LossInstance) -> Self {
        Self {
            t,
            active_task,
            loss,
        }
    }
}

/// `max_t sup_{w ∈ V} ‖∇ℓ_t(w)‖⋆` over a stream.
pub fn stream_lipschitz(rounds: &[Round], set: &FeasibleSet, dual: NormTag) -> Result<f64> {
    rounds
        .iter()
        .map(|r| dual_gradient_bound(&r.loss, set, dual))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
}
