//! Curriculum policies for reinforcement learning agents.
//!
//! A curriculum MDP wraps a base learner: its states are the learner's
//! weight vectors, its actions are training tasks, and its reward is the
//! negative number of environment steps spent training. The crate ships a
//! keys/locks/pits gridworld, three tile-coded Sarsa(λ) agents for it, the
//! curriculum MDP itself, three state representations for the curriculum
//! agent, and an experiment harness that learns curriculum policies over
//! many seeded trials.

pub mod agents;
pub mod cmdp;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod learner;
pub mod repr;
pub mod rng;
pub mod tilecoder;

pub use error::{Error, Result};
