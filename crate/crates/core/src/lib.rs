//! Multitask online mirror descent.
//!
//! `N` learners each own a block of a compound vector and share their
//! gradients through a symmetric positive definite interaction matrix `A`.
//! The crate provides the interaction operators, task-variance measures,
//! closed-form multitask OGD and EG updates, a generic mirror-descent step,
//! loss streams, and an experiment harness that measures multitask regret
//! against exact batch comparators.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compound;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod interaction;
pub mod learners;
pub mod selftest;
pub mod solver;
pub mod variance;

pub use compound::CompoundVector;
pub use error::{Error, Result};
pub use geometry::{NormTag, Regularizer, RegularizerKind};
pub use interaction::{GraphSpec, InteractionOperator, Which};
pub use learners::{FeasibleSet, Learner, LearnerConfig, LearnerState, RateSchedule, UpdateRule};
pub use variance::{VarianceKind, VarianceSpec};
