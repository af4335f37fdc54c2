//! Egocentric gridworld agents: tile-coded percept features and an
//! environment adapter for the Sarsa(λ) learner.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::gridworld::{
    self, enumerate_ground_states, reachable_states, sense, Action, ActionSet, EpisodeEnd,
    GridState, Percepts, Side, Task, TaskSuite, DEFAULT_STATE_CAP, NUM_RAW_PERCEPTS,
};
use crate::learner::{ActionFeatures, Environment, FeatureMap, Transition};
use crate::rng::Rng;
use crate::tilecoder::{TileCoder, TileIndex, TilingGroup};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Two tiling groups over 13 percepts each, one weight block per action.
    Basic,
    /// Move actions only see the sensors facing their direction.
    ActionDependent,
    /// The basic agent with four extra rope actions.
    Rope,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [
        AgentKind::Basic,
        AgentKind::ActionDependent,
        AgentKind::Rope,
    ];

    pub fn actions(self) -> ActionSet {
        match self {
            AgentKind::Rope => ActionSet::WithRope,
            _ => ActionSet::Standard,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Basic => "basic",
            AgentKind::ActionDependent => "action-dependent",
            AgentKind::Rope => "rope",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| crate::Error::config(format!("unknown agent kind {s:?}")))
    }
}

const KEY: usize = 0;
const LOCK: usize = 1;
const BEACON: usize = 2;
const PIT: usize = 3;
const NO_KEY: usize = 16;
const WIDTH: f64 = 1.0;
const TILINGS: usize = 4;

fn per_side(sensor: usize) -> impl Iterator<Item = usize> {
    (0..4).map(move |s| s * 4 + sensor)
}

/// Raw-percept indices of one group, with their value ranges.
fn joint(sensors: &[usize], no_key: bool, range: f64) -> (Vec<usize>, Vec<f64>) {
    let mut inputs = Vec::new();
    let mut upper = Vec::new();
    for &s in sensors {
        for i in per_side(s) {
            inputs.push(i);
            upper.push(if s == PIT { 1.0 } else { range });
        }
    }
    if no_key {
        inputs.push(NO_KEY);
        upper.push(1.0);
    }
    (inputs, upper)
}

fn group(inputs: Vec<usize>, upper: Vec<f64>) -> TilingGroup {
    let d = inputs.len();
    TilingGroup::new(
        inputs,
        TILINGS,
        vec![WIDTH; d],
        vec![0.0; d],
        upper,
        TileIndex::Dense,
    )
}

/// Every percept vector the suite can produce: all enumerated ground states
/// plus every state reachable with rope actions.
fn suite_percepts(suite: &TaskSuite, range: f64) -> Result<Vec<[f64; NUM_RAW_PERCEPTS]>> {
    let mut out = Vec::new();
    for task in suite.tasks() {
        let mut states = enumerate_ground_states(task, DEFAULT_STATE_CAP)?;
        states.extend(reachable_states(
            task,
            ActionSet::WithRope,
            DEFAULT_STATE_CAP,
        )?);
        out.extend(states.iter().map(|s| sense(s, task, range).raw()));
    }
    Ok(out)
}

fn lookup_coder(groups: Vec<TilingGroup>, samples: &[[f64; NUM_RAW_PERCEPTS]]) -> TileCoder {
    let groups = groups
        .into_iter()
        .map(|g| {
            let local: Vec<Vec<f64>> = samples
                .iter()
                .map(|raw| g.inputs().iter().map(|&i| raw[i]).collect())
                .collect();
            g.with_lookup(local.iter().map(Vec::as_slice))
        })
        .collect();
    TileCoder::new(groups)
}

#[derive(Debug)]
enum Layout {
    /// One state encoding copied into a weight block per action.
    Shared { coder: TileCoder },
    /// Moves share one block fed by the sensors facing the move; pickup and
    /// unlock each own a block over the joint sensors.
    Split { moves: TileCoder, joint: TileCoder },
}

/// Linear features of a gridworld agent over its percepts.
#[derive(Debug)]
pub struct GridFeatures {
    kind: AgentKind,
    layout: Layout,
    dim: usize,
    groups: Vec<Vec<Range<usize>>>,
    range: f64,
}

impl GridFeatures {
    /// Builds the features for `kind` with tile tables covering every
    /// percept any task of `suite` can produce.
    pub fn new(kind: AgentKind, suite: &TaskSuite) -> Result<Self> {
        let range = suite.sensor_range();
        let samples = suite_percepts(suite, range)?;
        let num_actions = kind.actions().len();
        let (layout, dim, groups) = match kind {
            AgentKind::Basic | AgentKind::Rope => {
                let specs = [
                    joint(&[KEY, BEACON, PIT], true, range),
                    joint(&[LOCK, BEACON, PIT], true, range),
                ];
                let coder = lookup_coder(
                    specs.into_iter().map(|(i, u)| group(i, u)).collect(),
                    &samples,
                );
                let state_dim = coder.len();
                let groups = (0..coder.groups().len())
                    .map(|g| {
                        (0..num_actions)
                            .map(|a| {
                                let start = a * state_dim + coder.offset(g);
                                start..start + coder.groups()[g].size()
                            })
                            .collect()
                    })
                    .collect();
                (Layout::Shared { coder }, state_dim * num_actions, groups)
            }
            AgentKind::ActionDependent => {
                // Directional input: [key, lock, beacon, pit, noKey] of one side.
                let moves = TileCoder::new(vec![
                    group(vec![LOCK, PIT, 4], vec![range, 1.0, 1.0]),
                    group(vec![KEY, PIT, 4], vec![range, 1.0, 1.0]),
                    group(vec![BEACON, PIT], vec![range, 1.0]),
                ]);
                let specs = [
                    joint(&[LOCK, PIT], true, range),
                    joint(&[KEY, PIT], true, range),
                    joint(&[BEACON, PIT], false, range),
                ];
                let joint = lookup_coder(
                    specs.into_iter().map(|(i, u)| group(i, u)).collect(),
                    &samples,
                );
                let mut groups: Vec<Vec<Range<usize>>> = (0..moves.groups().len())
                    .map(|g| {
                        let start = moves.offset(g);
                        std::iter::once(start..start + moves.groups()[g].size()).collect()
                    })
                    .collect();
                for g in 0..joint.groups().len() {
                    let ranges = [moves.len(), moves.len() + joint.len()].map(|base| {
                        base + joint.offset(g)..base + joint.offset(g) + joint.groups()[g].size()
                    });
                    groups.push(ranges.to_vec());
                }
                let dim = moves.len() + 2 * joint.len();
                (Layout::Split { moves, joint }, dim, groups)
            }
        };
        Ok(GridFeatures {
            kind,
            layout,
            dim,
            groups,
            range,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn actions(&self) -> ActionSet {
        self.kind.actions()
    }

    /// Distance reported by a sensor that sees nothing.
    pub fn sensor_range(&self) -> f64 {
        self.range
    }

    /// Weight indices of each tiling group, across every action that uses
    /// the group.
    pub fn weight_groups(&self) -> &[Vec<Range<usize>>] {
        &self.groups
    }

    /// Times a percept fell outside the tile extents.
    pub fn clamped_count(&self) -> u64 {
        match &self.layout {
            Layout::Shared { coder } => coder.clamped_count(),
            Layout::Split { moves, joint } => moves.clamped_count() + joint.clamped_count(),
        }
    }
}

impl FeatureMap for GridFeatures {
    type Obs = Percepts;

    fn dim(&self) -> usize {
        self.dim
    }

    fn num_actions(&self) -> usize {
        self.kind.actions().len()
    }

    fn encode(&self, obs: &Percepts, out: &mut ActionFeatures) {
        out.clear();
        let raw = obs.raw();
        let mut state = Vec::with_capacity(4);
        match &self.layout {
            Layout::Shared { coder } => {
                coder.encode_into(&raw, &mut state);
                for a in 0..self.num_actions() {
                    let base = a * coder.len();
                    out.extend(state.iter().map(|&i| base + i));
                    out.finish_action();
                }
            }
            Layout::Split { moves, joint } => {
                for action in self.actions().actions() {
                    state.clear();
                    match action {
                        Action::Move(d) => {
                            let s = Side::ALL.iter().position(|&s| s == Side::of(d)).unwrap();
                            let dir = [
                                raw[s * 4],
                                raw[s * 4 + 1],
                                raw[s * 4 + 2],
                                raw[s * 4 + 3],
                                raw[NO_KEY],
                            ];
                            moves.encode_into(&dir, &mut state);
                            out.extend(state.iter().copied());
                        }
                        Action::Pickup => {
                            joint.encode_into(&raw, &mut state);
                            out.extend(state.iter().map(|&i| moves.len() + i));
                        }
                        Action::Unlock => {
                            joint.encode_into(&raw, &mut state);
                            out.extend(state.iter().map(|&i| moves.len() + joint.len() + i));
                        }
                        Action::Rope(_) => unreachable!("action-dependent agent has no rope"),
                    }
                    out.finish_action();
                }
            }
        }
    }
}

/// Feature lists of every enumerated ground state of a task, used to read
/// off the greedy policy.
#[derive(Debug)]
pub struct GroundStates {
    features: Vec<ActionFeatures>,
}

impl GroundStates {
    pub fn new(task: &Task, features: &GridFeatures) -> Result<Self> {
        let states = enumerate_ground_states(task, DEFAULT_STATE_CAP)?;
        let features = states
            .iter()
            .map(|s| {
                let mut f = ActionFeatures::new();
                features.encode(&sense(s, task, features.sensor_range()), &mut f);
                f
            })
            .collect();
        Ok(GroundStates { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[ActionFeatures] {
        &self.features
    }

    /// Greedy action per state; ties go to the lowest index so equal
    /// weights always give equal snapshots.
    pub fn greedy_policy(&self, weights: &[f64], out: &mut Vec<u8>) {
        out.clear();
        for f in &self.features {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for a in 0..f.num_actions() {
                let v = f.value(weights, a);
                if v > best_v {
                    best = a;
                    best_v = v;
                }
            }
            out.push(best as u8);
        }
    }

    /// Action values of every state, concatenated.
    pub fn action_values(&self, weights: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for f in &self.features {
            for a in 0..f.num_actions() {
                out.push(f.value(weights, a));
            }
        }
    }
}

/// One task seen through an agent's sensors and action set.
#[derive(Debug)]
pub struct GridEnv<'a> {
    task: &'a Task,
    actions: ActionSet,
    range: f64,
    state: GridState,
    end: Option<EpisodeEnd>,
}

impl<'a> GridEnv<'a> {
    pub fn new(task: &'a Task, actions: ActionSet, sensor_range: f64) -> Self {
        let state = gridworld::reset(task, &mut crate::rng::from_seed(0));
        GridEnv {
            task,
            actions,
            range: sensor_range,
            state,
            end: None,
        }
    }

    pub fn for_agent(task: &'a Task, features: &GridFeatures) -> Self {
        Self::new(task, features.actions(), features.sensor_range())
    }

    pub fn task(&self) -> &Task {
        self.task
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    /// How the last finished episode ended.
    pub fn last_end(&self) -> Option<EpisodeEnd> {
        self.end
    }
}

impl Environment for GridEnv<'_> {
    type Obs = Percepts;

    fn reset(&mut self, rng: &mut Rng) -> Result<Percepts> {
        self.state = gridworld::reset(self.task, rng);
        self.end = None;
        Ok(sense(&self.state, self.task, self.range))
    }

    fn step(&mut self, action: usize, _rng: &mut Rng) -> Result<Transition<Percepts>> {
        let step = gridworld::step(&self.state, self.actions.action(action), self.task);
        self.state = step.state;
        self.end = step.end;
        Ok(Transition {
            obs: sense(&self.state, self.task, self.range),
            reward: step.reward,
            done: step.done,
        })
    }
}
