//! The curriculum MDP: a gridworld learner wrapped as an environment whose
//! actions are tasks and whose reward is the negative cost of training.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{GridEnv, GridFeatures, GroundStates};
use crate::gridworld::{optimal_return, TaskSuite};
use crate::learner::{
    greedy_return_shaped, sarsa_episode, LearnerConfig, LinearQ, ShapingState, Traces,
};
use crate::rng::Rng;
use crate::{Error, Result};

/// When training on one task stops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceStop {
    /// The greedy action over every ground state of the task has not
    /// changed for `patience` episodes.
    Convergence { patience: usize },
    /// A training episode returned at least `rho` times the task's best
    /// achievable return.
    ReturnFraction { rho: f64 },
    /// A fixed number of episodes.
    FixedEpisodes { episodes: usize },
}

impl Default for SourceStop {
    fn default() -> Self {
        SourceStop::Convergence { patience: 10 }
    }
}

impl FromStr for SourceStop {
    type Err = Error;

    /// `convergence`, `convergence:N`, `return:RHO` or `fixed:K`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("bad source stop {s:?}"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let stop = match (name, arg) {
            ("convergence", None) => SourceStop::default(),
            ("convergence", Some(a)) => SourceStop::Convergence {
                patience: a.parse().map_err(|_| bad())?,
            },
            ("return", Some(a)) => SourceStop::ReturnFraction {
                rho: a.parse().map_err(|_| bad())?,
            },
            ("fixed", Some(a)) => SourceStop::FixedEpisodes {
                episodes: a.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        stop.validate()?;
        Ok(stop)
    }
}

impl SourceStop {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceStop::Convergence { patience: 0 } => {
                Err(Error::config("convergence patience must be positive"))
            }
            SourceStop::ReturnFraction { rho } if !(rho > 0.0 && rho <= 1.0) => Err(Error::config(
                format!("return fraction must lie in (0, 1], got {rho}"),
            )),
            SourceStop::FixedEpisodes { episodes: 0 } => {
                Err(Error::config("fixed episode count must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    /// Keep training the same weights from task to task.
    #[default]
    ValueFunction,
    /// Start each task from scratch, shaped by the sum of earlier value
    /// functions.
    RewardShaping,
}

impl FromStr for TransferKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vf" | "value-function" => Ok(TransferKind::ValueFunction),
            "shaping" | "reward-shaping" => Ok(TransferKind::RewardShaping),
            _ => Err(Error::config(format!("unknown transfer kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostUnit {
    #[default]
    Steps,
    Episodes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CmdpConfig {
    /// Id of the target task. Every task of the suite is an action.
    pub target: String,
    /// Greedy target return that ends a curriculum.
    pub delta: f64,
    /// Greedy episodes averaged for the target check. Not counted as cost.
    pub eval_episodes: usize,
    pub source_stop: SourceStop,
    pub transfer: TransferKind,
    pub cost_unit: CostUnit,
    /// Task selections after which a curriculum is cut off, with a penalty
    /// equal to its accumulated cost.
    pub max_cmdp_steps: usize,
    /// Environment steps after which training on one task is cut off.
    pub max_task_steps: u64,
}

impl Default for CmdpConfig {
    fn default() -> Self {
        CmdpConfig {
            target: "target".into(),
            delta: 700.0,
            eval_episodes: 1,
            source_stop: SourceStop::default(),
            transfer: TransferKind::ValueFunction,
            cost_unit: CostUnit::Steps,
            max_cmdp_steps: 25,
            max_task_steps: 200_000,
        }
    }
}

impl CmdpConfig {
    pub fn validate(&self, suite: &TaskSuite) -> Result<()> {
        if suite.position(&self.target).is_none() {
            return Err(Error::config(format!(
                "target task {:?} is not in the suite",
                self.target
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::config("delta must be finite"));
        }
        if self.eval_episodes == 0 || self.max_cmdp_steps == 0 || self.max_task_steps == 0 {
            return Err(Error::config(
                "eval_episodes, max_cmdp_steps and max_task_steps must be positive",
            ));
        }
        self.source_stop.validate()
    }
}

/// True iff the last `patience + 1` snapshots are identical.
pub fn policy_converged<T: PartialEq>(history: &[T], patience: usize) -> bool {
    history.len() > patience
        && history[history.len() - patience - 1..]
            .windows(2)
            .all(|w| w[0] == w[1])
}

/// Incremental form of [`policy_converged`] that only keeps the latest
/// snapshot.
#[derive(Debug, Default)]
struct PolicyTracker {
    last: Option<Vec<u8>>,
    streak: usize,
}

impl PolicyTracker {
    fn push(&mut self, snapshot: &[u8]) {
        match &mut self.last {
            Some(last) if last.as_slice() == snapshot => self.streak += 1,
            Some(last) => {
                last.clear();
                last.extend_from_slice(snapshot);
                self.streak = 0;
            }
            None => self.last = Some(snapshot.to_vec()),
        }
    }

    fn converged(&self, patience: usize) -> bool {
        self.streak >= patience
    }
}

/// Why training on a task ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    ReturnReached,
    FixedEpisodes,
    /// The per-task step budget ran out first.
    Budget,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::ReturnReached => "return-reached",
            StopReason::FixedEpisodes => "fixed-episodes",
            StopReason::Budget => "budget",
        }
    }
}

/// The learner's knowledge between task selections.
#[derive(Clone, Debug)]
pub struct CurriculumState {
    /// The learner. With shaping, the agent trained most recently.
    pub agent: LinearQ<GridFeatures>,
    /// Accumulated potentials; `None` for value-function transfer.
    pub shaping: Option<ShapingState>,
    /// Every task selected so far, by suite index.
    pub tasks_so_far: Vec<usize>,
    /// Cost accumulated in this curriculum.
    pub cost: f64,
}

impl CurriculumState {
    /// The weights that carry knowledge from task to task: θ for
    /// value-function transfer, the summed potential for shaping.
    pub fn knowledge(&self) -> &[f64] {
        match &self.shaping {
            Some(s) => s.summed_potential(),
            None => &self.agent.theta,
        }
    }

    pub fn steps(&self) -> usize {
        self.tasks_so_far.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CmdpTransition {
    pub task: usize,
    /// Training cost of this selection, in the configured unit.
    pub cost: f64,
    pub env_steps: u64,
    pub episodes: u64,
    pub stop: StopReason,
    /// Greedy return on the target after training.
    pub eval_return: f64,
    pub terminal: bool,
    /// The curriculum hit `max_cmdp_steps` without reaching the target
    /// threshold.
    pub capped: bool,
    /// Extra negative reward charged when capped.
    pub penalty: f64,
}

impl CmdpTransition {
    /// Reward seen by the curriculum agent.
    pub fn reward(&self) -> f64 {
        -self.cost - self.penalty
    }
}

/// Everything fixed across curricula: tasks, agent features and settings.
#[derive(Debug)]
pub struct Cmdp {
    suite: Arc<TaskSuite>,
    features: Arc<GridFeatures>,
    ground: Vec<GroundStates>,
    optimal: Vec<f64>,
    target: usize,
    cfg: CmdpConfig,
    base: LearnerConfig,
}

impl Cmdp {
    pub fn new(
        suite: Arc<TaskSuite>,
        features: Arc<GridFeatures>,
        cfg: CmdpConfig,
        base: LearnerConfig,
    ) -> Result<Self> {
        cfg.validate(&suite)?;
        base.validate()?;
        let target = suite.position(&cfg.target).expect("validated");
        let ground = suite
            .tasks()
            .iter()
            .map(|t| GroundStates::new(t, &features))
            .collect::<Result<Vec<_>>>()?;
        let optimal = match cfg.source_stop {
            SourceStop::ReturnFraction { .. } => suite
                .tasks()
                .iter()
                .map(|t| optimal_return(t, features.actions()))
                .collect::<Result<Vec<_>>>()?,
            _ => vec![f64::NAN; suite.len()],
        };
        Ok(Cmdp {
            suite,
            features,
            ground,
            optimal,
            target,
            cfg,
            base,
        })
    }

    pub fn suite(&self) -> &TaskSuite {
        &self.suite
    }

    pub fn features(&self) -> &Arc<GridFeatures> {
        &self.features
    }

    pub fn config(&self) -> &CmdpConfig {
        &self.cfg
    }

    pub fn base_learner(&self) -> &LearnerConfig {
        &self.base
    }

    pub fn num_tasks(&self) -> usize {
        self.suite.len()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Ground states of a task, with their features.
    pub fn ground_states(&self, task: usize) -> &GroundStates {
        &self.ground[task]
    }

    /// Return a training episode must reach to stop under
    /// [`SourceStop::ReturnFraction`]. A task whose best return is not
    /// positive must reach that best return.
    pub fn return_threshold(&self, task: usize) -> Option<f64> {
        match self.cfg.source_stop {
            SourceStop::ReturnFraction { rho } => {
                let best = self.optimal[task];
                Some(if best > 0.0 { rho * best } else { best })
            }
            _ => None,
        }
    }

    /// An untrained learner: all weights zero, no potentials.
    pub fn reset(&self) -> CurriculumState {
        let agent = LinearQ::new(Arc::clone(&self.features));
        let shaping = match self.cfg.transfer {
            TransferKind::ValueFunction => None,
            TransferKind::RewardShaping => Some(ShapingState::new(agent.theta.len())),
        };
        CurriculumState {
            agent,
            shaping,
            tasks_so_far: Vec::new(),
            cost: 0.0,
        }
    }

    /// Trains on `task` until the stop rule fires, then checks the target.
    pub fn step(
        &self,
        state: &mut CurriculumState,
        task: usize,
        rng: &mut Rng,
    ) -> Result<CmdpTransition> {
        assert!(task < self.suite.len(), "task {task} out of range");
        let shaping = state.shaping.take();
        if shaping.is_some() {
            state.agent.reset();
        }
        let result = self.train(&mut state.agent, task, shaping.as_ref(), rng);
        let (env_steps, episodes, stop) = match result {
            Ok(r) => r,
            Err(e) => {
                state.shaping = shaping;
                return Err(e);
            }
        };

        let mut eval_env = GridEnv::for_agent(self.suite.get(self.target), &self.features);
        let eval_return = greedy_return_shaped(
            &state.agent,
            shaping.as_ref(),
            &mut eval_env,
            self.cfg.eval_episodes,
            rng,
        )?;

        state.shaping = match shaping {
            Some(mut s) => {
                // The agent learned Q - Φ; its own estimate of Q is θ + Φ.
                let mut learned = state.agent.clone();
                for (w, p) in learned.theta.iter_mut().zip(s.summed_potential()) {
                    *w += p;
                }
                s.add_source_potential(&learned)?;
                Some(s)
            }
            None => None,
        };

        let cost = match self.cfg.cost_unit {
            CostUnit::Steps => env_steps as f64,
            CostUnit::Episodes => episodes as f64,
        };
        state.cost += cost;
        state.tasks_so_far.push(task);
        let reached = eval_return >= self.cfg.delta;
        let capped = !reached && state.tasks_so_far.len() >= self.cfg.max_cmdp_steps;
        Ok(CmdpTransition {
            task,
            cost,
            env_steps,
            episodes,
            stop,
            eval_return,
            terminal: reached || capped,
            capped,
            penalty: if capped { state.cost } else { 0.0 },
        })
    }

    fn train(
        &self,
        agent: &mut LinearQ<GridFeatures>,
        task: usize,
        shaping: Option<&ShapingState>,
        rng: &mut Rng,
    ) -> Result<(u64, u64, StopReason)> {
        let mut env = GridEnv::for_agent(self.suite.get(task), &self.features);
        let mut traces = Traces::new(agent.theta.len());
        let ground = &self.ground[task];
        let mut tracker = PolicyTracker::default();
        let mut snapshot = Vec::with_capacity(ground.len());
        let mut combined = Vec::new();
        let mut take_snapshot = |agent: &LinearQ<GridFeatures>, tracker: &mut PolicyTracker| {
            let weights = match shaping {
                Some(s) => {
                    combined.clear();
                    combined.extend(
                        agent
                            .theta
                            .iter()
                            .zip(s.summed_potential())
                            .map(|(w, p)| w + p),
                    );
                    &combined
                }
                None => &agent.theta,
            };
            ground.greedy_policy(weights, &mut snapshot);
            tracker.push(&snapshot);
        };
        if matches!(self.cfg.source_stop, SourceStop::Convergence { .. }) {
            take_snapshot(agent, &mut tracker);
        }
        let threshold = self.return_threshold(task);
        let (mut steps, mut episodes) = (0u64, 0u64);
        loop {
            let stats = sarsa_episode(agent, &mut env, &self.base, shaping, &mut traces, rng)?;
            steps += stats.steps;
            episodes += 1;
            let stop = match self.cfg.source_stop {
                SourceStop::Convergence { patience } => {
                    take_snapshot(agent, &mut tracker);
                    tracker.converged(patience).then_some(StopReason::Converged)
                }
                SourceStop::ReturnFraction { .. } => {
                    (stats.ret >= threshold.expect("set")).then_some(StopReason::ReturnReached)
                }
                SourceStop::FixedEpisodes { episodes: k } => {
                    (episodes >= k as u64).then_some(StopReason::FixedEpisodes)
                }
            };
            if let Some(stop) = stop {
                return Ok((steps, episodes, stop));
            }
            if steps >= self.cfg.max_task_steps {
                return Ok((steps, episodes, StopReason::Budget));
            }
        }
    }
}
