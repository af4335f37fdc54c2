use std::collections::{HashMap, VecDeque};

use super::{step, ActionSet, Cell, EpisodeEnd, GridState, Task};
use crate::{Error, Result};

/// Default bound on how many states an exhaustive enumeration may produce.
pub const DEFAULT_STATE_CAP: usize = 20_000;

/// Every non-terminal (position, keys held, locks open) combination of a
/// task, without rope bridges, in a fixed order: row-major position, then
/// key mask, then lock mask. Pit and lock cells are excluded, as are lock
/// states whose required keys are not held.
pub fn enumerate_ground_states(task: &Task, cap: usize) -> Result<Vec<GridState>> {
    let spec = task.spec();
    let n_keys = spec.keys.len();
    let n_locks = spec.locks.len();
    let combos = ((spec.width as usize) * (spec.height as usize)) << (n_keys + n_locks);
    if n_keys + n_locks >= 32 || combos > cap.saturating_mul(4) {
        return Err(Error::config(format!(
            "task {} has too many ground states to enumerate (cap {cap})",
            spec.id
        )));
    }
    let mut out = Vec::new();
    for y in 0..spec.height {
        for x in 0..spec.width {
            let pos = Cell::new(x, y);
            if task.is_pit(pos) || task.lock_at(pos).is_some() {
                continue;
            }
            for keys in 0..1u64 << n_keys {
                for locks in 0..1u64 << n_locks {
                    let consistent = (0..n_locks).all(|l| {
                        let need = task.lock_requirement(l);
                        locks & (1 << l) == 0 || keys & need == need
                    });
                    if !consistent || task.goal_met(keys, locks) {
                        continue;
                    }
                    out.push(GridState {
                        agent_pos: pos,
                        keys_held: keys,
                        locks_open: locks,
                        rope_bridges: Default::default(),
                        steps: 0,
                    });
                    if out.len() > cap {
                        return Err(Error::config(format!(
                            "task {} exceeds the ground-state cap of {cap}",
                            spec.id
                        )));
                    }
                }
            }
        }
    }
    Ok(out)
}

type Edge = (f64, Option<usize>, Option<EpisodeEnd>);

struct Graph {
    states: Vec<GridState>,
    /// Per state, per action: reward and successor (`None` when terminal).
    edges: Vec<Vec<Edge>>,
}

fn explore(task: &Task, actions: ActionSet, cap: usize) -> Result<Graph> {
    let mut start = super::reset(task, &mut crate::rng::from_seed(0));
    start.steps = 0;
    let mut index = HashMap::from([(start.clone(), 0usize)]);
    let mut states = vec![start];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut out = Vec::with_capacity(actions.len());
        for action in actions.actions() {
            let mut s = step(&states[i], action, task);
            s.state.steps = 0;
            let next = match s.end {
                Some(EpisodeEnd::Pit | EpisodeEnd::Goal) => None,
                _ => Some(match index.get(&s.state) {
                    Some(&j) => j,
                    None => {
                        let j = states.len();
                        if j >= cap {
                            return Err(Error::config(format!(
                                "task {} exceeds the reachable-state cap of {cap}",
                                task.id()
                            )));
                        }
                        index.insert(s.state.clone(), j);
                        states.push(s.state);
                        queue.push_back(j);
                        j
                    }
                }),
            };
            out.push((s.reward, next, s.end));
        }
        edges.push(out);
    }
    Ok(Graph { states, edges })
}

/// Non-terminal states reachable from the start with the given actions,
/// in breadth-first order. Step counters are zeroed.
pub fn reachable_states(task: &Task, actions: ActionSet, cap: usize) -> Result<Vec<GridState>> {
    Ok(explore(task, actions, cap)?.states)
}

/// Whether any action sequence reaches the task's goal.
pub fn goal_reachable(task: &Task, actions: ActionSet) -> Result<bool> {
    let g = explore(task, actions, DEFAULT_STATE_CAP)?;
    Ok(g.edges
        .iter()
        .flatten()
        .any(|&(_, _, end)| end == Some(EpisodeEnd::Goal)))
}

/// Best undiscounted return achievable from the start state, ignoring the
/// episode step cap. When the goal is unreachable this is the best way to
/// end the episode, which may be negative.
pub fn optimal_return(task: &Task, actions: ActionSet) -> Result<f64> {
    let g = explore(task, actions, DEFAULT_STATE_CAP)?;
    let n = g.states.len();
    let mut value = vec![f64::NEG_INFINITY; n];
    // Longest path with no positive cycles: Bellman-Ford converges in at
    // most n sweeps.
    for _ in 0..=n {
        let mut changed = false;
        for i in 0..n {
            let best = g.edges[i]
                .iter()
                .map(|&(r, next, _)| r + next.map_or(0.0, |j| value[j]))
                .fold(f64::NEG_INFINITY, f64::max);
            if best > value[i] {
                value[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(value[0])
}
