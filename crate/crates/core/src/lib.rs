//! Repeated principal-agent games with hidden agent rewards.
//!
//! The principal offers per-action incentives each round and observes only
//! which action the agent picks. From those choices it maintains the set of
//! agent reward vectors consistent with the history ([`estimator`]), and an
//! epsilon-greedy policy ([`policy`]) trades uniform exploration against
//! steering the agent onto the principal's estimated best arm. [`agents`]
//! provides truthful and rent-extracting strategic agents, and [`harness`]
//! runs seeded replications with pseudo-regret accounting.

// `!(x >= lo)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod config;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod golden;
pub mod harness;
pub mod model;
pub mod policy;
pub mod report;

pub use error::{Error, Result};
pub use estimator::{ConstraintPolytope, CoordinateBounds};
pub use model::{
    best_response, normalize, ActionIndex, IncentiveVector, InstanceParams,
    NormalizedRewardVector, ProblemInstance, RewardRange,
};
