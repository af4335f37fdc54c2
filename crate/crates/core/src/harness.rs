//! Experiment driver: seeded parallel trials of curriculum learning and
//! the learning curves they produce.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, GridFeatures};
use crate::cmdp::{Cmdp, CmdpConfig, CmdpTransition, CurriculumState};
use crate::gridworld::TaskSuite;
use crate::learner::{
    sarsa_episode, ActionTiled, Environment, LearnerConfig, LinearQ, Traces, Transition,
};
use crate::repr::{ReprKind, ReprParams, Representation};
use crate::rng::{self, Rng};
use crate::tilecoder::SparseFeatures;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Always select the target task.
    NoCurriculum,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-curriculum" => Ok(Baseline::NoCurriculum),
            _ => Err(Error::config(format!("unknown baseline {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    /// Curriculum state representation. Exclusive with `baseline`.
    pub repr: Option<ReprKind>,
    pub baseline: Option<Baseline>,
    pub repr_params: ReprParams,
    pub cmdp: CmdpConfig,
    pub cmdp_learner: LearnerConfig,
    pub base_learner: LearnerConfig,
    /// Curriculum episodes per trial.
    pub episodes: usize,
    pub trials: usize,
    pub seed: u64,
    /// Directory of task files; the built-in suite when unset.
    pub tasks_dir: Option<PathBuf>,
    /// Learning-curve CSV.
    pub output: Option<PathBuf>,
    /// Per-selection transition log CSV.
    pub transitions: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            agent: AgentKind::Basic,
            repr: Some(ReprKind::FiniteState),
            baseline: None,
            repr_params: ReprParams::default(),
            cmdp: CmdpConfig::default(),
            cmdp_learner: LearnerConfig::curriculum(),
            base_learner: LearnerConfig::base(),
            episodes: 200,
            trials: 50,
            seed: 0,
            tasks_dir: None,
            output: None,
            transitions: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML config. A file that names a baseline and no
    /// representation runs the baseline. A relative `tasks_dir` is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        if let Some(dir) = &cfg.tasks_dir {
            if dir.is_relative() {
                cfg.tasks_dir = Some(path.parent().unwrap_or(Path::new(".")).join(dir));
            }
        }
        Ok(cfg)
    }

    /// Parses TOML text with the same rules as [`load`](Self::load).
    /// A relative `tasks_dir` stays relative to the working directory.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<string>"))
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|source| Error::Parse {
            path: path.to_owned(),
            source,
        })?;
        let baseline_only = table.contains_key("baseline") && !table.contains_key("repr");
        // a partial [cmdp_learner] keeps the curriculum defaults for the rest
        if let Some(toml::Value::Table(section)) = table.get_mut("cmdp_learner") {
            let defaults = toml::Table::try_from(LearnerConfig::curriculum())
                .expect("learner config serializes");
            for (k, v) in defaults {
                section.entry(k).or_insert(v);
            }
        }
        let mut cfg: ExperimentConfig = table.try_into().map_err(|source| Error::Parse {
            path: path.to_owned(),
            source,
        })?;
        if baseline_only {
            cfg.repr = None;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.repr, self.baseline) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::config("set exactly one of repr and baseline")),
        }
        if self.trials == 0 || self.episodes == 0 {
            return Err(Error::config("trials and episodes must be positive"));
        }
        self.repr_params.validate()?;
        self.cmdp_learner.validate()?;
        self.base_learner.validate()
    }

    pub fn suite(&self) -> Result<TaskSuite> {
        match &self.tasks_dir {
            Some(dir) => TaskSuite::load_dir(dir),
            None => Ok(TaskSuite::builtin()),
        }
    }
}

/// One row of the transition log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionRecord {
    pub trial: usize,
    pub episode: usize,
    pub step: usize,
    pub task_id: String,
    pub cost: f64,
    pub terminal: bool,
    pub cumulative_cost: f64,
    pub stop: &'static str,
    pub capped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    /// Total cost of each curriculum episode.
    pub costs: Vec<f64>,
    pub log: Vec<TransitionRecord>,
}

/// Shared, read-only setup of one experiment.
#[derive(Debug)]
pub struct Experiment {
    cfg: ExperimentConfig,
    cmdp: Cmdp,
    repr: Option<Representation>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let suite = cfg.suite()?;
        Self::with_suite(cfg, suite)
    }

    pub fn with_suite(cfg: ExperimentConfig, suite: TaskSuite) -> Result<Self> {
        cfg.validate()?;
        let suite = Arc::new(suite);
        let features = Arc::new(GridFeatures::new(cfg.agent, &suite)?);
        let cmdp = Cmdp::new(suite, features, cfg.cmdp.clone(), cfg.base_learner.clone())?;
        let repr = cfg
            .repr
            .map(|k| Representation::new(k, &cfg.repr_params, &cmdp))
            .transpose()?;
        Ok(Experiment { cfg, cmdp, repr })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn cmdp(&self) -> &Cmdp {
        &self.cmdp
    }

    pub fn representation(&self) -> Option<&Representation> {
        self.repr.as_ref()
    }

    /// Runs every curriculum episode of one trial on its own random stream.
    pub fn run_trial(&self, trial: usize) -> Result<TrialResult> {
        let mut rng = rng::trial_stream(self.cfg.seed, trial as u64);
        let log = self.cfg.transitions.is_some();
        let mut env = CurriculumEnv::new(self, trial, log);
        let mut costs = Vec::with_capacity(self.cfg.episodes);
        match &self.repr {
            Some(repr) => {
                let features = Arc::new(ActionTiled {
                    state_dim: repr.dim(),
                    actions: self.cmdp.num_tasks(),
                });
                let mut q = LinearQ::new(features);
                let mut traces = Traces::new(q.theta.len());
                for _ in 0..self.cfg.episodes {
                    sarsa_episode(
                        &mut q,
                        &mut env,
                        &self.cfg.cmdp_learner,
                        None,
                        &mut traces,
                        &mut rng,
                    )
                    .map_err(|e| diagnose(e, trial, env.episode))?;
                    costs.push(env.state.cost);
                }
            }
            None => {
                let target = self.cmdp.target();
                for _ in 0..self.cfg.episodes {
                    env.reset(&mut rng)?;
                    while !env
                        .step(target, &mut rng)
                        .map_err(|e| diagnose(e, trial, env.episode))?
                        .done
                    {}
                    costs.push(env.state.cost);
                }
            }
        }
        Ok(TrialResult {
            costs,
            log: env.log,
        })
    }

    /// Runs all trials on `threads` workers (all cores when `None`).
    /// Results come back in trial order whatever the thread count.
    pub fn run(&self, threads: Option<usize>) -> Result<Vec<TrialResult>> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build()?;
        pool.install(|| {
            (0..self.cfg.trials)
                .into_par_iter()
                .map(|t| self.run_trial(t))
                .collect()
        })
    }
}

fn diagnose(e: Error, trial: usize, episode: usize) -> Error {
    match e {
        Error::NumericFault(msg) => {
            Error::NumericFault(format!("trial {trial}, episode {episode}: {msg}"))
        }
        other => other,
    }
}

/// The curriculum MDP seen as an episodic environment over features.
struct CurriculumEnv<'a> {
    exp: &'a Experiment,
    state: CurriculumState,
    legal: Option<Vec<bool>>,
    trial: usize,
    episode: usize,
    log: Vec<TransitionRecord>,
    logging: bool,
}

impl<'a> CurriculumEnv<'a> {
    fn new(exp: &'a Experiment, trial: usize, logging: bool) -> Self {
        CurriculumEnv {
            exp,
            state: exp.cmdp.reset(),
            legal: None,
            trial,
            episode: 0,
            log: Vec::new(),
            logging,
        }
    }

    fn observe(&mut self) -> SparseFeatures {
        match &self.exp.repr {
            Some(r) => {
                self.legal = r.legal_actions(&self.state, self.exp.cmdp.num_tasks());
                r.encode(&self.state, &self.exp.cmdp)
            }
            None => SparseFeatures::new(Vec::new(), 0),
        }
    }

    fn record(&mut self, t: &CmdpTransition) {
        if !self.logging {
            return;
        }
        self.log.push(TransitionRecord {
            trial: self.trial,
            episode: self.episode,
            step: self.state.steps(),
            task_id: self.exp.cmdp.suite().get(t.task).id().to_owned(),
            cost: t.cost,
            terminal: t.terminal,
            cumulative_cost: self.state.cost,
            stop: t.stop.name(),
            capped: t.capped,
        });
    }
}

impl Environment for CurriculumEnv<'_> {
    type Obs = SparseFeatures;

    fn reset(&mut self, _rng: &mut Rng) -> Result<SparseFeatures> {
        self.state = self.exp.cmdp.reset();
        self.episode += 1;
        Ok(self.observe())
    }

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<Transition<SparseFeatures>> {
        let t = self.exp.cmdp.step(&mut self.state, action, rng)?;
        self.record(&t);
        let obs = if t.terminal {
            let dim = self.exp.repr.as_ref().map_or(0, Representation::dim);
            SparseFeatures::new(Vec::new(), dim)
        } else {
            self.observe()
        };
        Ok(Transition {
            obs,
            reward: t.reward(),
            done: t.terminal,
        })
    }

    fn legal_actions(&self) -> Option<&[bool]> {
        self.legal.as_deref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean_cost: f64,
    pub stderr: f64,
    pub n_trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        assert!(!values.is_empty(), "cannot summarize nothing");
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, stderr, n }
    }

    /// 95% normal confidence interval.
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.mean - 1.96 * self.stderr,
            self.mean + 1.96 * self.stderr,
        )
    }
}

/// Elementwise mean and standard error across trials.
///
/// Panics if the trials differ in length.
pub fn aggregate(trials: &[Vec<f64>]) -> LearningCurve {
    assert!(!trials.is_empty(), "no trials");
    let len = trials[0].len();
    assert!(
        trials.iter().all(|t| t.len() == len),
        "trials differ in length"
    );
    let points = (0..len)
        .map(|e| {
            let column: Vec<f64> = trials.iter().map(|t| t[e]).collect();
            let s = Summary::of(&column);
            CurvePoint {
                episode: e + 1,
                mean_cost: s.mean,
                stderr: s.stderr,
                n_trials: s.n,
            }
        })
        .collect();
    LearningCurve { points }
}

/// Per-trial mean cost over `episodes`, summarized across trials.
pub fn window_summary(trials: &[Vec<f64>], episodes: Range<usize>) -> Summary {
    let means: Vec<f64> = trials
        .iter()
        .map(|t| {
            let w = &t[episodes.clone()];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    Summary::of(&means)
}

impl LearningCurve {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub fn write_transitions<W: std::io::Write>(trials: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in trials.iter().flat_map(|t| &t.log) {
        w.serialize(rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_transitions(trials: &[TrialResult], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_transitions(trials, std::io::BufWriter::new(file))
}
