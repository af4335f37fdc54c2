use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ActionFeatures, FeatureMap, LinearQ, ShapingState};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    #[default]
    Replacing,
    Accumulating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub trace: TraceKind,
    /// Traces below this magnitude are dropped. Zero keeps every trace.
    pub trace_cutoff: f64,
    /// Divide α by the number of active features of φ(s, a).
    pub normalize_alpha: bool,
    /// Clear all traces after an exploratory action.
    pub cut_traces_on_exploration: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::base()
    }
}

impl LearnerConfig {
    /// Gridworld agents: ε = 0.1, α = 0.1, λ = 0.9, γ = 1, with α split
    /// across the active features.
    pub fn base() -> Self {
        LearnerConfig {
            epsilon: 0.1,
            alpha: 0.1,
            lambda: 0.9,
            gamma: 1.0,
            trace: TraceKind::Replacing,
            trace_cutoff: 1e-3,
            normalize_alpha: true,
            cut_traces_on_exploration: false,
        }
    }

    /// Curriculum agent: as [`LearnerConfig::base`] with ε = 0.001.
    pub fn curriculum() -> Self {
        LearnerConfig {
            epsilon: 0.001,
            ..LearnerConfig::base()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |x: f64| x > 0.0 && x <= 1.0;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit_open(self.epsilon) || !unit_open(self.alpha) {
            return Err(Error::config(format!(
                "epsilon and alpha must lie in (0, 1], got {} and {}",
                self.epsilon, self.alpha
            )));
        }
        if !unit(self.lambda) || !unit(self.gamma) {
            return Err(Error::config(format!(
                "lambda and gamma must lie in [0, 1], got {} and {}",
                self.lambda, self.gamma
            )));
        }
        if !(self.trace_cutoff >= 0.0 && self.trace_cutoff < 1.0) {
            return Err(Error::config("trace_cutoff must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<O> {
    pub obs: O,
    pub reward: f64,
    pub done: bool,
}

/// An episodic environment with a fixed discrete action set.
pub trait Environment {
    type Obs;

    fn reset(&mut self, rng: &mut Rng) -> Result<Self::Obs>;

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<Transition<Self::Obs>>;

    /// Actions available in the current state; `None` means all of them.
    fn legal_actions(&self) -> Option<&[bool]> {
        None
    }
}

/// ε-greedy choice over `values`. Draws one uniform number to decide
/// whether to explore, then one index if exploring or if several actions
/// tie for the maximum. Returns the action and whether it was exploratory.
pub fn epsilon_greedy(
    values: &[f64],
    legal: Option<&[bool]>,
    epsilon: f64,
    rng: &mut Rng,
) -> (usize, bool) {
    let allowed = |a: usize| legal.is_none_or(|m| m[a]);
    let explore = rng.gen::<f64>() < epsilon;
    let mut candidates: Vec<usize> = Vec::with_capacity(values.len());
    if explore {
        candidates.extend((0..values.len()).filter(|&a| allowed(a)));
    } else {
        let mut best = f64::NEG_INFINITY;
        for (a, &v) in values.iter().enumerate() {
            if !allowed(a) {
                continue;
            }
            if v > best {
                best = v;
                candidates.clear();
                candidates.push(a);
            } else if v == best {
                candidates.push(a);
            }
        }
    }
    assert!(!candidates.is_empty(), "no legal action");
    let a = if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    };
    (a, explore)
}

/// Sparse eligibility traces over a weight vector.
#[derive(Clone, Debug)]
pub struct Traces {
    e: Vec<f64>,
    listed: Vec<bool>,
    active: Vec<usize>,
}

impl Traces {
    pub fn new(dim: usize) -> Self {
        Traces {
            e: vec![0.0; dim],
            listed: vec![false; dim],
            active: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.active {
            self.e[i] = 0.0;
            self.listed[i] = false;
        }
        self.active.clear();
    }

    pub fn get(&self, i: usize) -> f64 {
        self.e[i]
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    fn visit(&mut self, features: &[usize], kind: TraceKind) {
        for &i in features {
            if !self.listed[i] {
                self.listed[i] = true;
                self.active.push(i);
            }
            match kind {
                TraceKind::Replacing => self.e[i] = 1.0,
                TraceKind::Accumulating => self.e[i] += 1.0,
            }
        }
    }

    fn apply(&self, theta: &mut [f64], step: f64) {
        for &i in &self.active {
            theta[i] += step * self.e[i];
        }
    }

    fn decay(&mut self, factor: f64, cutoff: f64) {
        let e = &mut self.e;
        let listed = &mut self.listed;
        self.active.retain(|&i| {
            e[i] *= factor;
            if e[i].abs() < cutoff || e[i] == 0.0 {
                e[i] = 0.0;
                listed[i] = false;
                false
            } else {
                true
            }
        });
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    /// Sum of environment rewards, without any shaping.
    pub ret: f64,
    pub steps: u64,
}

/// Runs one episode of linear Sarsa(λ), updating `q.theta` in place.
///
/// With `shaping`, the learner sees r + γΦ(s', a') − Φ(s, a), where a' is
/// the action it takes next and Φ is zero after the episode ends. Actions
/// are then chosen greedily on Q + Φ, so the learned θ holds Q* − Φ.
pub fn sarsa_episode<F, E>(
    q: &mut LinearQ<F>,
    env: &mut E,
    cfg: &LearnerConfig,
    shaping: Option<&ShapingState>,
    traces: &mut Traces,
    rng: &mut Rng,
) -> Result<EpisodeStats>
where
    F: FeatureMap,
    E: Environment<Obs = F::Obs>,
{
    assert_eq!(traces.e.len(), q.theta.len(), "trace length");
    traces.clear();
    let features = std::sync::Arc::clone(q.features());
    let mut cur = ActionFeatures::new();
    let mut next = ActionFeatures::new();
    let obs = env.reset(rng)?;
    features.encode(&obs, &mut cur);
    let (mut a, _) = epsilon_greedy(
        &biased_values(&cur, &q.theta, shaping),
        env.legal_actions(),
        cfg.epsilon,
        rng,
    );
    let mut stats = EpisodeStats::default();

    loop {
        let active = cur.action(a);
        traces.visit(active, cfg.trace);
        let q_sa = cur.value(&q.theta, a);
        let phi_sa = shaping.map_or(0.0, |s| s.potential(&cur, a));
        let rate = if cfg.normalize_alpha && !active.is_empty() {
            cfg.alpha / active.len() as f64
        } else {
            cfg.alpha
        };

        let t = env.step(a, rng)?;
        stats.steps += 1;
        stats.ret += t.reward;

        if t.done {
            let delta = t.reward - phi_sa - q_sa;
            check(delta)?;
            traces.apply(&mut q.theta, rate * delta);
            return Ok(stats);
        }

        features.encode(&t.obs, &mut next);
        let (a_next, explored) = epsilon_greedy(
            &biased_values(&next, &q.theta, shaping),
            env.legal_actions(),
            cfg.epsilon,
            rng,
        );
        let shaped = match shaping {
            Some(s) => cfg.gamma * s.potential(&next, a_next) - phi_sa,
            None => 0.0,
        };
        let delta = t.reward + shaped + cfg.gamma * next.value(&q.theta, a_next) - q_sa;
        check(delta)?;
        traces.apply(&mut q.theta, rate * delta);
        if explored && cfg.cut_traces_on_exploration {
            traces.clear();
        } else {
            traces.decay(cfg.gamma * cfg.lambda, cfg.trace_cutoff);
        }
        std::mem::swap(&mut cur, &mut next);
        a = a_next;
    }
}

fn biased_values(
    feats: &ActionFeatures,
    theta: &[f64],
    shaping: Option<&ShapingState>,
) -> Vec<f64> {
    let mut v = feats.values(theta);
    if let Some(s) = shaping {
        for (a, x) in v.iter_mut().enumerate() {
            *x += s.potential(feats, a);
        }
    }
    v
}

fn check(delta: f64) -> Result<()> {
    if delta.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericFault(format!("TD error became {delta}")))
    }
}

/// Mean return of `n_episodes` greedy episodes (ε = 0, ties broken at
/// random) without learning.
pub fn greedy_return<F, E>(
    q: &LinearQ<F>,
    env: &mut E,
    n_episodes: usize,
    rng: &mut Rng,
) -> Result<f64>
where
    F: FeatureMap,
    E: Environment<Obs = F::Obs>,
{
    greedy_return_shaped(q, None, env, n_episodes, rng)
}

/// Like [`greedy_return`], acting greedily on Q + Φ for an agent trained
/// with `shaping`.
pub fn greedy_return_shaped<F, E>(
    q: &LinearQ<F>,
    shaping: Option<&ShapingState>,
    env: &mut E,
    n_episodes: usize,
    rng: &mut Rng,
) -> Result<f64>
where
    F: FeatureMap,
    E: Environment<Obs = F::Obs>,
{
    assert!(n_episodes >= 1, "need at least one evaluation episode");
    let mut feats = ActionFeatures::new();
    let mut total = 0.0;
    for _ in 0..n_episodes {
        let mut obs = env.reset(rng)?;
        loop {
            q.features().encode(&obs, &mut feats);
            let values = biased_values(&feats, &q.theta, shaping);
            let (a, _) = epsilon_greedy(&values, env.legal_actions(), 0.0, rng);
            let t = env.step(a, rng)?;
            total += t.reward;
            if t.done {
                break;
            }
            obs = t.obs;
        }
    }
    Ok(total / n_episodes as f64)
}
