//! Test-only environments and independent reference implementations.
#![allow(dead_code)]

use curriculum::learner::{Environment, Transition};
use curriculum::rng::Rng;
use curriculum::Result;
use rand::Rng as _;

/// Small deterministic tabular gridworld: 4 moves, a goal cell worth +10,
/// a pit worth -10, -1 per step, blocked edges.
#[derive(Clone, Debug)]
pub struct TabularGrid {
    pub width: usize,
    pub height: usize,
    pub start: usize,
    pub goal: usize,
    pub pit: Option<usize>,
    pub max_steps: usize,
    pos: usize,
    steps: usize,
}

pub const GOAL_REWARD: f64 = 10.0;
pub const PIT_REWARD: f64 = -10.0;
pub const STEP_REWARD: f64 = -1.0;

impl TabularGrid {
    pub fn five_by_five() -> Self {
        TabularGrid {
            width: 5,
            height: 5,
            start: 0,
            goal: 24,
            pit: Some(12),
            max_steps: 60,
            pos: 0,
            steps: 0,
        }
    }

    pub fn states(&self) -> usize {
        self.width * self.height
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        s == self.goal || Some(s) == self.pit
    }

    /// Deterministic model: next state and reward, ignoring the step cap.
    pub fn model(&self, s: usize, a: usize) -> (usize, f64) {
        let (x, y) = ((s % self.width) as i64, (s / self.width) as i64);
        let (dx, dy) = [(0, -1), (0, 1), (1, 0), (-1, 0)][a];
        let (nx, ny) = (x + dx, y + dy);
        let next = if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            s
        } else {
            (ny as usize) * self.width + nx as usize
        };
        let r = if next == self.goal {
            GOAL_REWARD
        } else if Some(next) == self.pit {
            PIT_REWARD
        } else {
            STEP_REWARD
        };
        (next, r)
    }
}

impl Environment for TabularGrid {
    type Obs = usize;

    fn reset(&mut self, _rng: &mut Rng) -> Result<usize> {
        self.pos = self.start;
        self.steps = 0;
        Ok(self.pos)
    }

    fn step(&mut self, a: usize, _rng: &mut Rng) -> Result<Transition<usize>> {
        let (next, reward) = self.model(self.pos, a);
        self.pos = next;
        self.steps += 1;
        let done = self.is_terminal(next) || self.steps >= self.max_steps;
        Ok(Transition {
            obs: next,
            reward,
            done,
        })
    }
}

/// ε-greedy with the documented draw order: one uniform to decide on
/// exploration, then one index when exploring or when the maximum ties.
pub fn reference_egreedy(values: &[f64], epsilon: f64, rng: &mut Rng) -> usize {
    let explore = rng.gen::<f64>() < epsilon;
    let candidates: Vec<usize> = if explore {
        (0..values.len()).collect()
    } else {
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..values.len()).filter(|&a| values[a] == best).collect()
    };
    if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    }
}

/// Explicit Q-table Sarsa(λ) with dense replacing traces and no pruning.
pub struct QTable {
    pub q: Vec<Vec<f64>>,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl QTable {
    pub fn new(
        states: usize,
        actions: usize,
        alpha: f64,
        gamma: f64,
        lambda: f64,
        epsilon: f64,
    ) -> Self {
        QTable {
            q: vec![vec![0.0; actions]; states],
            alpha,
            gamma,
            lambda,
            epsilon,
        }
    }

    pub fn episode(&mut self, env: &mut TabularGrid, rng: &mut Rng) {
        let actions = self.q[0].len();
        let mut e = vec![vec![0.0; actions]; self.q.len()];
        let mut s = env.reset(rng).unwrap();
        let mut a = reference_egreedy(&self.q[s], self.epsilon, rng);
        loop {
            e[s][a] = 1.0;
            let t = env.step(a, rng).unwrap();
            let step = if t.done {
                self.alpha * (t.reward - self.q[s][a])
            } else {
                let a2 = reference_egreedy(&self.q[t.obs], self.epsilon, rng);
                let delta = t.reward + self.gamma * self.q[t.obs][a2] - self.q[s][a];
                let step = self.alpha * delta;
                for (qs, es) in self.q.iter_mut().zip(&e) {
                    for (qa, ea) in qs.iter_mut().zip(es) {
                        *qa += step * ea;
                    }
                }
                for es in e.iter_mut() {
                    for ea in es.iter_mut() {
                        *ea *= self.gamma * self.lambda;
                    }
                }
                s = t.obs;
                a = a2;
                continue;
            };
            for (qs, es) in self.q.iter_mut().zip(&e) {
                for (qa, ea) in qs.iter_mut().zip(es) {
                    *qa += step * ea;
                }
            }
            return;
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().flatten().copied().collect()
    }
}

/// Value iteration on the deterministic model with an optional
/// state-action potential. With a potential, the learner sees
/// r + γΦ(s', b*) − Φ(s, a) where b* is the action the Φ-biased greedy
/// policy takes in s', and acts greedily on Q + Φ.
/// Returns the optimal action sets per non-terminal state.
pub fn value_iteration_policy(
    env: &TabularGrid,
    gamma: f64,
    potential: Option<&[Vec<f64>]>,
    tol: f64,
) -> Vec<Vec<usize>> {
    let n = env.states();
    let phi = |s: usize, a: usize| potential.map_or(0.0, |p| p[s][a]);
    let mut q = vec![vec![0.0f64; 4]; n];
    for _ in 0..10_000 {
        let mut diff = 0.0f64;
        let mut next_q = q.clone();
        for s in 0..n {
            if env.is_terminal(s) {
                continue;
            }
            for a in 0..4 {
                let (s2, r) = env.model(s, a);
                let future = if env.is_terminal(s2) {
                    0.0
                } else {
                    (0..4)
                        .map(|b| q[s2][b] + phi(s2, b))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let v = r + gamma * future - phi(s, a);
                diff = diff.max((v - q[s][a]).abs());
                next_q[s][a] = v;
            }
        }
        q = next_q;
        if diff < 1e-13 {
            break;
        }
    }
    (0..n)
        .map(|s| {
            if env.is_terminal(s) {
                return vec![];
            }
            let biased: Vec<f64> = (0..4).map(|a| q[s][a] + phi(s, a)).collect();
            let best = biased.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (0..4).filter(|&a| biased[a] >= best - tol).collect()
        })
        .collect()
}

/// A gridworld agent trained from scratch for a fixed number of episodes.
pub fn train_grid_agent(
    kind: curriculum::agents::AgentKind,
    suite: &curriculum::gridworld::TaskSuite,
    task: &str,
    episodes: usize,
    seed: u64,
) -> curriculum::learner::LinearQ<curriculum::agents::GridFeatures> {
    use curriculum::agents::{GridEnv, GridFeatures};
    use curriculum::learner::{sarsa_episode, FeatureMap, LearnerConfig, LinearQ, Traces};
    let features = std::sync::Arc::new(GridFeatures::new(kind, suite).unwrap());
    let mut q = LinearQ::new(features.clone());
    let mut env = GridEnv::for_agent(suite.by_id(task).unwrap(), &features);
    let mut traces = Traces::new(features.dim());
    let mut rng = curriculum::rng::from_seed(seed);
    let cfg = LearnerConfig::base();
    for _ in 0..episodes {
        sarsa_episode(&mut q, &mut env, &cfg, None, &mut traces, &mut rng).unwrap();
    }
    q
}
