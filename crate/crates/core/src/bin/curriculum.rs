use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use curriculum::agents::AgentKind;
use curriculum::cmdp::{SourceStop, TransferKind};
use curriculum::harness::{
    aggregate, save_transitions, window_summary, Baseline, Experiment, ExperimentConfig,
};
use curriculum::repr::ReprKind;

/// Learn curriculum policies for gridworld agents and write the learning
/// curve as CSV (episode,mean_cost,stderr,n_trials).
#[derive(Parser, Debug)]
#[command(name = "curriculum", version)]
struct Args {
    /// Experiment config (TOML). Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// basic, action-dependent or rope.
    #[arg(long)]
    agent: Option<AgentKind>,
    /// finite-state, continuous or naive:CAP.
    #[arg(long, conflicts_with = "baseline")]
    repr: Option<ReprKind>,
    /// Run a fixed baseline instead of learning: no-curriculum.
    #[arg(long)]
    baseline: Option<Baseline>,
    /// vf or shaping.
    #[arg(long)]
    transfer: Option<TransferKind>,
    #[arg(long)]
    trials: Option<usize>,
    /// Curriculum episodes per trial.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// convergence[:PATIENCE], return:RHO or fixed:EPISODES.
    #[arg(long)]
    source_stop: Option<SourceStop>,
    /// Learning-curve CSV path; stdout when unset.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-selection transition log CSV.
    #[arg(long)]
    transitions: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory of task files, replacing the built-in suite.
    #[arg(long)]
    tasks_dir: Option<PathBuf>,
}

fn config(args: &Args) -> curriculum::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(a) = args.agent {
        cfg.agent = a;
    }
    if let Some(r) = args.repr {
        cfg.repr = Some(r);
        cfg.baseline = None;
    }
    if let Some(b) = args.baseline {
        cfg.baseline = Some(b);
        cfg.repr = None;
    }
    if let Some(t) = args.transfer {
        cfg.cmdp.transfer = t;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if let Some(n) = args.episodes {
        cfg.episodes = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.source_stop {
        cfg.cmdp.source_stop = s;
    }
    if let Some(p) = &args.out {
        cfg.output = Some(p.clone());
    }
    if let Some(p) = &args.transitions {
        cfg.transitions = Some(p.clone());
    }
    if let Some(d) = &args.tasks_dir {
        cfg.tasks_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> curriculum::Result<()> {
    let cfg = config(args)?;
    let start = Instant::now();
    let exp = Experiment::new(cfg)?;
    let trials = exp.run(args.threads)?;
    let costs: Vec<Vec<f64>> = trials.iter().map(|t| t.costs.clone()).collect();
    let curve = aggregate(&costs);
    let cfg = exp.config();
    match &cfg.output {
        Some(path) => curve.save(path)?,
        None => curve.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &cfg.transitions {
        save_transitions(&trials, path)?;
    }
    let tail = (cfg.episodes / 10).max(1);
    let head = window_summary(&costs, 0..tail);
    let last = window_summary(&costs, cfg.episodes - tail..cfg.episodes);
    let what = match (cfg.repr, cfg.baseline) {
        (Some(r), _) => r.to_string(),
        _ => "no-curriculum".into(),
    };
    eprintln!(
        "{} agent, {what}: first {tail} episodes {:.1} ± {:.1}, last {tail} episodes {:.1} ± {:.1} ({} trials, {:.1?})",
        cfg.agent.name(),
        head.mean,
        head.stderr,
        last.mean,
        last.stderr,
        cfg.trials,
        start.elapsed()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
