//! End-to-end acceptance checks at the stated scale and tolerances.
//!
//! Runs as a plain binary: one PASS/FAIL line per check, nonzero exit if any
//! check fails. Expect about half an hour on one core.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{value_iteration_policy, QTable, TabularGrid};
use curriculum::agents::{AgentKind, GridEnv, GridFeatures};
use curriculum::cmdp::{Cmdp, CmdpConfig, SourceStop, TransferKind};
use curriculum::gridworld::TaskSuite;
use curriculum::harness::{
    aggregate, window_summary, Baseline, Experiment, ExperimentConfig, Summary,
};
use curriculum::learner::{
    greedy_return, sarsa_episode, transfer_value_function, LearnerConfig, LinearQ, OneHot, Traces,
};
use curriculum::repr::{ListCodec, ReprKind, ReprParams, Representation};
use curriculum::rng;
use curriculum::tilecoder::{normalize_group, TileCoder, TileIndex, TilingGroup};
use rand::Rng as _;

const TRIALS: usize = 50;
const EPISODES: usize = 200;
const WINDOW: usize = EPISODES / 10;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn fmt(s: &Summary) -> String {
    let (lo, hi) = s.ci95();
    format!("{:.0} [{:.0}, {:.0}]", s.mean, lo, hi)
}

fn run(cfg: ExperimentConfig) -> Vec<Vec<f64>> {
    let exp = Experiment::new(cfg).expect("valid experiment");
    exp.run(None)
        .expect("experiment runs")
        .into_iter()
        .map(|t| t.costs)
        .collect()
}

fn learned(repr: ReprKind, stop: SourceStop) -> ExperimentConfig {
    ExperimentConfig {
        agent: AgentKind::Basic,
        repr: Some(repr),
        baseline: None,
        episodes: EPISODES,
        trials: TRIALS,
        cmdp: CmdpConfig {
            source_stop: stop,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn no_curriculum(stop: SourceStop) -> ExperimentConfig {
    ExperimentConfig {
        repr: None,
        baseline: Some(Baseline::NoCurriculum),
        ..learned(ReprKind::FiniteState, stop)
    }
}

/// Final-window mean at least 10% below the baseline, 95% intervals apart.
fn beats(curve: &Summary, base: &Summary) -> bool {
    curve.mean <= 0.9 * base.mean && curve.ci95().1 < base.ci95().0
}

fn threshold_attainability(report: &mut Report) {
    const SEEDS: u64 = 20;
    let suite = Arc::new(TaskSuite::builtin());
    for kind in AgentKind::ALL {
        let start = Instant::now();
        let features = Arc::new(GridFeatures::new(kind, &suite).unwrap());
        let cfg = CmdpConfig {
            eval_episodes: 10,
            ..Default::default()
        };
        let cmdp = Cmdp::new(suite.clone(), features, cfg, LearnerConfig::base()).unwrap();
        let returns: Vec<f64> = (0..SEEDS)
            .map(|seed| {
                let mut s = cmdp.reset();
                cmdp.step(&mut s, cmdp.target(), &mut rng::trial_stream(1000, seed))
                    .unwrap()
                    .eval_return
            })
            .collect();
        let elapsed = start.elapsed();
        let mean = returns.iter().sum::<f64>() / SEEDS as f64;
        let reached = returns.iter().filter(|&&r| r >= 700.0).count();
        let worst = returns.iter().cloned().fold(f64::INFINITY, f64::min);
        report.check(
            &format!("threshold attainability ({})", kind.name()),
            mean >= 700.0 && elapsed <= Duration::from_secs(600),
            format!(
                "mean greedy return {mean:.1} over {SEEDS} converged agents, {reached}/{SEEDS} at >= 700, worst {worst:.0}, {elapsed:.1?}"
            ),
        );
    }
}

fn curriculum_benefit(
    report: &mut Report,
    label: &str,
    stop: SourceStop,
) -> Vec<(ReprKind, Vec<Vec<f64>>)> {
    let start = Instant::now();
    let base = run(no_curriculum(stop));
    let base_final = window_summary(&base, EPISODES - WINDOW..EPISODES);
    let mut out = Vec::new();
    for repr in [ReprKind::FiniteState, ReprKind::Continuous] {
        let costs = run(learned(repr, stop));
        let fin = window_summary(&costs, EPISODES - WINDOW..EPISODES);
        report.check(
            &format!("{label} ({repr})"),
            beats(&fin, &base_final),
            format!(
                "final {WINDOW} episodes {} vs no curriculum {} ({:.2}x)",
                fmt(&fin),
                fmt(&base_final),
                fin.mean / base_final.mean
            ),
        );
        out.push((repr, costs));
    }
    out.push((ReprKind::Naive { cap: 0 }, base));
    println!("     ({label}: {:.0?})", start.elapsed());
    out
}

fn naive_competence(report: &mut Report, tiled: &[(ReprKind, Vec<Vec<f64>>)]) {
    let naive = run(learned(ReprKind::Naive { cap: 2 }, SourceStop::default()));
    let base = &tiled
        .iter()
        .find(|(k, _)| *k == ReprKind::Naive { cap: 0 })
        .unwrap()
        .1;
    let base_final = window_summary(base, EPISODES - WINDOW..EPISODES);
    let fin = window_summary(&naive, EPISODES - WINDOW..EPISODES);
    report.check(
        "naive competence: beats no curriculum by the end",
        fin.mean < base_final.mean && fin.ci95().1 < base_final.ci95().0,
        format!(
            "final {WINDOW} episodes {} vs no curriculum {}",
            fmt(&fin),
            fmt(&base_final)
        ),
    );
    let early = window_summary(&naive, 0..WINDOW);
    let mut pass = true;
    let mut detail = format!("first {WINDOW} episodes naive {}", fmt(&early));
    for (kind, costs) in tiled
        .iter()
        .filter(|(k, _)| !matches!(k, ReprKind::Naive { .. }))
    {
        let e = window_summary(costs, 0..WINDOW);
        pass &= early.mean > e.mean;
        detail += &format!(", {kind} {}", fmt(&e));
    }
    report.check(
        "naive competence: slower start than tiled representations",
        pass,
        detail,
    );
}

fn shaping_invariance(report: &mut Report) {
    let env = TabularGrid::five_by_five();
    let plain = value_iteration_policy(&env, 0.95, None, 1e-9);
    let mut r = rng::from_seed(4);
    let same = (0..100)
        .filter(|_| {
            let phi: Vec<Vec<f64>> = (0..env.states())
                .map(|_| (0..4).map(|_| r.gen_range(-20.0..20.0)).collect())
                .collect();
            value_iteration_policy(&env, 0.95, Some(&phi), 1e-9) == plain
        })
        .count();
    report.check(
        "shaping invariance",
        same == 100,
        format!("{same}/100 random potentials keep the optimal policy"),
    );
}

fn tabular_equivalence(report: &mut Report) {
    let mut env = TabularGrid::five_by_five();
    let cfg = LearnerConfig {
        trace_cutoff: 0.0,
        normalize_alpha: false,
        ..LearnerConfig::base()
    };
    let mut q = LinearQ::new(Arc::new(OneHot {
        states: env.states(),
        actions: 4,
    }));
    let mut table = QTable::new(
        env.states(),
        4,
        cfg.alpha,
        cfg.gamma,
        cfg.lambda,
        cfg.epsilon,
    );
    let mut traces = Traces::new(q.theta.len());
    let (mut ra, mut rb) = (rng::from_seed(5), rng::from_seed(5));
    for _ in 0..100 {
        sarsa_episode(&mut q, &mut env, &cfg, None, &mut traces, &mut ra).unwrap();
        table.episode(&mut env, &mut rb);
    }
    let flat = table.flat();
    let diff = q
        .theta
        .iter()
        .zip(&flat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.check(
        "tabular equivalence",
        q.theta == flat,
        format!("max |theta - Q| = {diff:e} after 100 episodes"),
    );
}

fn transfer_identity(report: &mut Report) {
    let suite = Arc::new(TaskSuite::builtin());
    let features = Arc::new(GridFeatures::new(AgentKind::Basic, &suite).unwrap());
    let cmdp = Cmdp::new(
        suite.clone(),
        features.clone(),
        CmdpConfig::default(),
        LearnerConfig::base(),
    )
    .unwrap();
    let mut all = true;
    let mut detail = Vec::new();
    for id in ["task01", "task04", "task09", "target"] {
        let task = suite.position(id).unwrap();
        let mut s = cmdp.reset();
        cmdp.step(&mut s, task, &mut rng::from_seed(8)).unwrap();
        let mut env = GridEnv::for_agent(suite.get(task), &features);
        let source = greedy_return(&s.agent, &mut env, 5, &mut rng::from_seed(1)).unwrap();
        let mut dest = LinearQ::new(features.clone());
        transfer_value_function(&s.agent, &mut dest).unwrap();
        let copied = greedy_return(&dest, &mut env, 5, &mut rng::from_seed(2)).unwrap();
        all &= source == copied;
        detail.push(format!("{id} {source} -> {copied}"));
    }
    report.check("transfer identity", all, detail.join(", "));
}

fn csv(exp: &Experiment, threads: usize) -> Vec<u8> {
    let trials = exp.run(Some(threads)).unwrap();
    let costs: Vec<Vec<f64>> = trials.into_iter().map(|t| t.costs).collect();
    let mut out = Vec::new();
    aggregate(&costs).write_csv(&mut out).unwrap();
    out
}

fn determinism(report: &mut Report) {
    let fast = CmdpConfig {
        source_stop: SourceStop::FixedEpisodes { episodes: 5 },
        ..Default::default()
    };
    let shaping = CmdpConfig {
        transfer: TransferKind::RewardShaping,
        ..fast.clone()
    };
    let cases = [
        (
            AgentKind::Basic,
            Some(ReprKind::FiniteState),
            CmdpConfig::default(),
        ),
        (AgentKind::Basic, Some(ReprKind::Continuous), fast.clone()),
        (
            AgentKind::Basic,
            Some(ReprKind::Naive { cap: 2 }),
            fast.clone(),
        ),
        (AgentKind::Basic, None, fast.clone()),
        (AgentKind::Basic, Some(ReprKind::FiniteState), shaping),
        (AgentKind::Rope, Some(ReprKind::Continuous), fast.clone()),
        (
            AgentKind::ActionDependent,
            Some(ReprKind::FiniteState),
            fast,
        ),
    ];
    let mut same = 0;
    for (agent, repr, cmdp) in cases.iter().cloned() {
        let cfg = ExperimentConfig {
            agent,
            repr,
            baseline: repr.is_none().then_some(Baseline::NoCurriculum),
            cmdp,
            trials: 8,
            episodes: 10,
            seed: 42,
            ..Default::default()
        };
        let one = csv(&Experiment::new(cfg.clone()).unwrap(), 1);
        let eight = csv(&Experiment::new(cfg).unwrap(), 8);
        same += usize::from(one == eight);
    }
    report.check(
        "determinism",
        same == cases.len(),
        format!(
            "{same}/{} experiments give byte-identical CSVs at 1 and 8 threads",
            cases.len()
        ),
    );
}

fn timed(name: &str, f: impl FnOnce() -> bool) -> (String, bool, Duration) {
    let start = Instant::now();
    let ok = f();
    (name.to_owned(), ok, start.elapsed())
}

fn representation_properties(report: &mut Report) {
    let suite = Arc::new(TaskSuite::builtin());
    let features = Arc::new(GridFeatures::new(AgentKind::Basic, &suite).unwrap());
    let cmdp = Cmdp::new(
        suite.clone(),
        features.clone(),
        CmdpConfig::default(),
        LearnerConfig::base(),
    )
    .unwrap();
    let trained = common::train_grid_agent(AgentKind::Basic, &suite, "task09", 40, 3);
    let params = ReprParams::default();
    let results = [
        timed("normalization shift/scale invariance", || {
            let mut r = rng::from_seed(6);
            (0..1000).all(|_| {
                let v: Vec<f64> = (0..r.gen_range(1..20))
                    .map(|_| r.gen_range(-1e3..1e3))
                    .collect();
                let (c, k) = (r.gen_range(-1e3..1e3), r.gen_range(1e-2..1e2));
                let base = normalize_group(&v);
                let shifted = normalize_group(&v.iter().map(|x| x + c).collect::<Vec<_>>());
                let scaled = normalize_group(&v.iter().map(|x| x * k).collect::<Vec<_>>());
                base.iter().all(|x| (0.0..=1.0).contains(x))
                    && base.iter().zip(&shifted).all(|(a, b)| (a - b).abs() < 1e-9)
                    && base.iter().zip(&scaled).all(|(a, b)| (a - b).abs() < 1e-9)
            })
        }),
        timed("tile coder active counts", || {
            let mut r = rng::from_seed(7);
            (0..500).all(|_| {
                let tilings = r.gen_range(1..6);
                let dims = r.gen_range(1..5);
                let index = if r.gen() {
                    TileIndex::Dense
                } else {
                    TileIndex::Hashed {
                        buckets: 64,
                        seed: 1,
                    }
                };
                let coder = TileCoder::new(vec![TilingGroup::uniform(
                    (0..dims).collect(),
                    tilings,
                    r.gen_range(0.1..1.0),
                    0.0,
                    1.0,
                    index,
                )]);
                let x: Vec<f64> = (0..dims).map(|_| r.gen_range(-0.2..1.2)).collect();
                coder.encode(&x).active().len() == tilings
            })
        }),
        timed("tiled representation active counts", || {
            let mut s = cmdp.reset();
            s.agent.theta = trained.theta.clone();
            [ReprKind::FiniteState, ReprKind::Continuous]
                .into_iter()
                .all(|k| {
                    let r = Representation::new(k, &params, &cmdp).unwrap();
                    r.encode(&s, &cmdp).active().len() == r.active(&cmdp)
                        && r.encode(&cmdp.reset(), &cmdp) == r.encode(&cmdp.reset(), &cmdp)
                })
        }),
        timed("finite-state affine invariance", || {
            let r = Representation::new(ReprKind::FiniteState, &params, &cmdp).unwrap();
            let mut s = cmdp.reset();
            s.agent.theta = trained.theta.clone();
            let base = r.encode(&s, &cmdp);
            [(2.0, 0.0), (0.5, 3.0), (17.0, -40.0)]
                .into_iter()
                .all(|(k, c)| {
                    let mut t = cmdp.reset();
                    t.agent.theta = trained.theta.iter().map(|w| k * w + c).collect();
                    r.encode(&t, &cmdp) == base
                })
        }),
        timed("naive round trip", || {
            (1..12).all(|n| {
                (1..4).all(|cap| {
                    let codec = ListCodec { n, cap };
                    (0..codec.size()).all(|id| codec.encode(&codec.decode(id)) == id)
                })
            })
        }),
        timed("naive 111 states at cap 2", || {
            let r = Representation::new(ReprKind::Naive { cap: 2 }, &params, &cmdp).unwrap();
            ListCodec { n: 10, cap: 2 }.size() == 111 && r.dim() == 2 * 111
        }),
    ];
    let slow: Vec<String> = results
        .iter()
        .filter(|r| r.2 >= Duration::from_secs(1))
        .map(|r| format!("{} {:.1?}", r.0, r.2))
        .collect();
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    let longest = results.iter().map(|r| r.2).max().unwrap();
    report.check(
        "representation properties",
        slow.is_empty() && failed.is_empty(),
        format!(
            "{} suites, failing {failed:?}, over 1 s {slow:?}, longest {longest:.1?}",
            results.len()
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    let start = Instant::now();
    shaping_invariance(&mut report);
    tabular_equivalence(&mut report);
    transfer_identity(&mut report);
    representation_properties(&mut report);
    threshold_attainability(&mut report);
    determinism(&mut report);
    let converged = curriculum_benefit(&mut report, "curriculum benefit", SourceStop::default());
    naive_competence(&mut report, &converged);
    curriculum_benefit(
        &mut report,
        "stop-criterion robustness, fixed:5",
        SourceStop::FixedEpisodes { episodes: 5 },
    );
    println!(
        "{} check(s) failed ({:.0?})",
        report.failed,
        start.elapsed()
    );
    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
