//! Reinforcement learning of co-safe LTL instructions whose per-symbol
//! satisfaction regions are set at runtime by mapping specifications.
//!
//! The crate is organised bottom-up:
//!
//! * [`ltl`] parses, canonicalises and progresses formulas.
//! * [`mapping`] decides which symbol occurrences a state satisfies under a
//!   specification set.
//! * [`env`] holds the two kinematic simulators.
//! * [`mdp`] composes both into product-state episodes with reward.
//! * [`curriculum`] builds level-indexed task sets and advances levels.
//! * [`agent`] is the FiLM-conditioned actor-critic and its PPO trainer.
//! * [`harness`] runs experiments, evaluation, fuzzing and exports.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise. Results
//! are identical in both modes.

pub mod agent;
pub mod curriculum;
pub mod env;
pub mod error;
pub mod harness;
pub mod ltl;
pub mod mapping;
pub mod mdp;
pub mod par;
pub mod rng;
pub mod scripted;

pub use error::{Error, Result};
