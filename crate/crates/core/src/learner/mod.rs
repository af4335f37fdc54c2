//! Linear Sarsa(λ) over any feature map and discrete action set, plus the
//! two transfer mechanisms: copying weights into a new task and shaping the
//! reward with learned source value functions.

mod features;
mod sarsa;
mod shaping;
mod snapshot;

pub use features::{ActionFeatures, ActionTiled, FeatureMap, LinearQ, OneHot};
pub use sarsa::{
    epsilon_greedy, greedy_return, greedy_return_shaped, sarsa_episode, Environment, EpisodeStats,
    LearnerConfig, TraceKind, Traces, Transition,
};
pub use shaping::ShapingState;
pub use snapshot::{read_weights, write_weights};

use crate::{Error, Result};

/// Initializes `dest` with a copy of the weights learned by `source`.
pub fn transfer_value_function<F: FeatureMap>(
    source: &LinearQ<F>,
    dest: &mut LinearQ<F>,
) -> Result<()> {
    if source.theta.len() != dest.theta.len() {
        return Err(Error::config(format!(
            "cannot transfer {} weights into a learner with {}",
            source.theta.len(),
            dest.theta.len()
        )));
    }
    dest.theta.copy_from_slice(&source.theta);
    Ok(())
}
