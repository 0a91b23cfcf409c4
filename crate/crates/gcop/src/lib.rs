//! Guide-core policy composition at desk scale.
//!
//! A *guide* policy proposes a strategy for each task state, a black-box
//! *core* policy executes conditioned on it, and the composed system is
//! judged by net utility: task value minus `lambda` times inference cost.
//! This crate provides the pieces needed to build, train, and audit such
//! systems on small tabular instances:
//!
//! - [`policy`]: environments, tabular/external policies, exact composition,
//!   seeded rollouts, Monte-Carlo value estimation, and the net-utility
//!   objective.
//! - [`mixture`]: the student-teacher mixture model, guide-averaged
//!   executability, exact dynamic-programming values, and the value-gap
//!   bound checker.
//! - [`acceptance`]: K-trial strategy validation, Hoeffding certificates,
//!   acceptance-rate lower confidence bounds, and the curation loop that
//!   emits a fine-tuning corpus.
//! - [`strategy`]: the deterministic `<strategy>` block parser behind the
//!   structure indicator.
//! - [`reward`]: structure-gated shaped rewards with judge scoring and the
//!   non-degradation hinge.
//! - [`trainer`]: a tabular softmax guide trained with group-relative
//!   policy-gradient updates.
//! - [`gateway`]: cost-metered access to chat-completion endpoints plus the
//!   deterministic scripted stand-ins used by every offline test.

pub mod acceptance;
pub mod cost;
pub mod dist;
pub mod env;
pub mod gateway;
pub mod mixture;
pub mod oracle;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod strategy;
pub mod synth;
pub mod trainer;

mod error;

pub use error::{Error, Result};
