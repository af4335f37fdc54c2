//! Deterministic keys/locks/pits gridworld.
//!
//! The agent moves in the four cardinal directions, picks up keys, and
//! unlocks locks whose required keys it holds. Pits end the episode unless
//! they have been bridged with a rope. Every pit has a beacon on each of
//! its in-grid diagonal corners; beacons are landmarks only.

mod dynamics;
mod search;
mod sensors;
mod task;

pub use dynamics::{reset, step, EpisodeEnd, GridState, Step};
pub use search::{
    enumerate_ground_states, goal_reachable, optimal_return, reachable_states, DEFAULT_STATE_CAP,
};
pub use sensors::{sense, Percepts, Side, NUM_RAW_PERCEPTS};
pub use task::{Cell, Lock, Task, TaskSpec, TaskSuite, Termination};

pub const KEY_REWARD: f64 = 500.0;
pub const LOCK_REWARD: f64 = 1000.0;
pub const PIT_REWARD: f64 = -200.0;
pub const STEP_REWARD: f64 = -10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::South => (0, 1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Move(Direction),
    Pickup,
    Unlock,
    Rope(Direction),
}

/// The discrete action set available to an agent.
///
/// Indices 0..4 are the moves (N, S, E, W), 4 is pickup, 5 is unlock, and
/// with ropes 6..10 throw a rope N, S, E, W.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionSet {
    Standard,
    WithRope,
}

impl ActionSet {
    pub fn len(self) -> usize {
        match self {
            ActionSet::Standard => 6,
            ActionSet::WithRope => 10,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Panics if `index` is outside the set.
    pub fn action(self, index: usize) -> Action {
        assert!(
            index < self.len(),
            "action index {index} out of range for {self:?}"
        );
        match index {
            0..=3 => Action::Move(Direction::ALL[index]),
            4 => Action::Pickup,
            5 => Action::Unlock,
            _ => Action::Rope(Direction::ALL[index - 6]),
        }
    }

    pub fn index(self, action: Action) -> Option<usize> {
        let i = match action {
            Action::Move(d) => d as usize,
            Action::Pickup => 4,
            Action::Unlock => 5,
            Action::Rope(d) => 6 + d as usize,
        };
        (i < self.len()).then_some(i)
    }

    pub fn actions(self) -> impl Iterator<Item = Action> {
        (0..self.len()).map(move |i| self.action(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_indices_round_trip() {
        for set in [ActionSet::Standard, ActionSet::WithRope] {
            for i in 0..set.len() {
                assert_eq!(set.index(set.action(i)), Some(i));
            }
        }
        assert_eq!(
            ActionSet::Standard.index(Action::Rope(Direction::East)),
            None
        );
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn rope_index_rejected_without_rope() {
        ActionSet::Standard.action(7);
    }
}
