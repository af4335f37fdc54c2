use std::collections::BTreeSet;

use super::{Action, Cell, Direction, Task, KEY_REWARD, LOCK_REWARD, PIT_REWARD, STEP_REWARD};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridState {
    pub agent_pos: Cell,
    /// Bit `k` set when key `k` has been picked up.
    pub keys_held: u64,
    /// Bit `l` set when lock `l` is open.
    pub locks_open: u64,
    /// Pit cells bridged by a rope this episode.
    pub rope_bridges: BTreeSet<Cell>,
    pub steps: u32,
}

impl GridState {
    pub fn holds_key(&self, key: usize) -> bool {
        self.keys_held & (1 << key) != 0
    }

    pub fn lock_open(&self, lock: usize) -> bool {
        self.locks_open & (1 << lock) != 0
    }

    pub fn is_bridged(&self, c: Cell) -> bool {
        self.rope_bridges.contains(&c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EpisodeEnd {
    Pit,
    Goal,
    StepCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub state: GridState,
    pub reward: f64,
    pub done: bool,
    pub end: Option<EpisodeEnd>,
}

/// Start state of an episode. The layout is fixed by the task, so the
/// random source is not consumed.
pub fn reset(task: &Task, _rng: &mut Rng) -> GridState {
    GridState {
        agent_pos: task.spec().agent_start,
        keys_held: 0,
        locks_open: 0,
        rope_bridges: BTreeSet::new(),
        steps: 0,
    }
}

fn blocked(task: &Task, c: Cell) -> bool {
    !task.spec().contains(c) || task.lock_at(c).is_some()
}

/// Advances `state` by one action. Pure: equal inputs give equal outputs.
pub fn step(state: &GridState, action: Action, task: &Task) -> Step {
    let mut next = state.clone();
    next.steps += 1;
    let mut reward = STEP_REWARD;
    let mut end = None;

    match action {
        Action::Move(dir) => {
            let to = state.agent_pos.offset(dir.delta());
            if !blocked(task, to) {
                next.agent_pos = to;
                if task.is_pit(to) && !state.is_bridged(to) {
                    reward = PIT_REWARD;
                    end = Some(EpisodeEnd::Pit);
                }
            }
        }
        Action::Pickup => {
            if let Some(k) = task.key_at(state.agent_pos) {
                if !state.holds_key(k) {
                    next.keys_held |= 1 << k;
                    reward = KEY_REWARD;
                }
            }
        }
        Action::Unlock => {
            let openable = Direction::ALL.iter().find_map(|d| {
                let l = task.lock_at(state.agent_pos.offset(d.delta()))?;
                let need = task.lock_requirement(l);
                (!state.lock_open(l) && state.keys_held & need == need).then_some(l)
            });
            if let Some(l) = openable {
                next.locks_open |= 1 << l;
                reward = LOCK_REWARD;
            }
        }
        Action::Rope(dir) => {
            let mut c = state.agent_pos.offset(dir.delta());
            while task.is_pit(c) {
                next.rope_bridges.insert(c);
                c = c.offset(dir.delta());
            }
        }
    }

    if end.is_none() && task.goal_met(next.keys_held, next.locks_open) {
        end = Some(EpisodeEnd::Goal);
    }
    if end.is_none() && next.steps >= task.spec().max_episode_steps {
        end = Some(EpisodeEnd::StepCap);
    }
    Step {
        state: next,
        reward,
        done: end.is_some(),
        end,
    }
}
