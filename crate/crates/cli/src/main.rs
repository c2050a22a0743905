//! `pdppo` command-line tool.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors. Every flag can also be set through the environment
//! variable shown in `--help` (prefix `PDPPO_`); an explicit flag wins over
//! the variable, which wins over the config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdppo::agents::AgentKind;
use pdppo::checks::run_checks;
use pdppo::harness::{evaluate, run_benchmark, run_experiment, Checkpoint, EnvKind, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "pdppo", version, about = "Post-decision PPO: train, evaluate and benchmark agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent for one seed and write its curve, summary and checkpoint.
    Train(TrainArgs),
    /// Play greedy episodes with a saved checkpoint.
    Eval(EvalArgs),
    /// Train every method in the config for n_runs seeds and compare them.
    Bench(BenchArgs),
    /// Run the randomized invariant suite of an environment.
    EnvCheck(EnvCheckArgs),
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    s.parse::<AgentKind>().map_err(|e| e.to_string())
}

fn parse_env(s: &str) -> Result<EnvKind, String> {
    s.parse::<EnvKind>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; missing keys take built-in defaults.
    #[arg(long, env = "PDPPO_CONFIG")]
    config: Option<PathBuf>,
    /// frozenlake or lotsizing (config: env.kind).
    #[arg(long, env = "PDPPO_ENV", value_parser = parse_env)]
    env: Option<EnvKind>,
    /// Base seed; run i uses seed + i (config: base_seed).
    #[arg(long, env = "PDPPO_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// ppo, pdppo or pdppo1c (config: agent).
    #[arg(long, env = "PDPPO_AGENT", value_parser = parse_agent)]
    agent: Option<AgentKind>,
    /// Environment steps (config: total_steps).
    #[arg(long, env = "PDPPO_STEPS")]
    steps: Option<usize>,
    /// Output directory (config: output_dir).
    #[arg(long, env = "PDPPO_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint written by train or bench.
    #[arg(long, env = "PDPPO_CHECKPOINT")]
    checkpoint: PathBuf,
    /// Number of greedy episodes.
    #[arg(long, env = "PDPPO_EPISODES", default_value_t = 100)]
    episodes: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Environment steps per run (config: total_steps).
    #[arg(long, env = "PDPPO_STEPS")]
    steps: Option<usize>,
    /// Seeds per method (config: n_runs).
    #[arg(long, env = "PDPPO_RUNS")]
    runs: Option<usize>,
    /// Worker threads (config: parallel_runs).
    #[arg(long, env = "PDPPO_PARALLEL")]
    parallel: Option<usize>,
    /// Output directory (config: output_dir).
    #[arg(long, env = "PDPPO_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvCheckArgs {
    /// frozenlake or lotsizing.
    #[arg(long, env = "PDPPO_ENV", value_parser = parse_env)]
    env: EnvKind,
    #[arg(long, env = "PDPPO_TRIALS", default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "PDPPO_SEED", default_value_t = 0)]
    seed: u64,
}

fn resolve(common: &Common, mut overrides: Overrides) -> pdppo::Result<ExperimentConfig> {
    overrides.env = common.env;
    overrides.seed = common.seed;
    ExperimentConfig::resolve(common.config.as_deref(), &overrides)
}

fn train(args: TrainArgs) -> pdppo::Result<()> {
    let mut cfg = resolve(
        &args.common,
        Overrides {
            agent: args.agent,
            steps: args.steps,
            out: args.out,
            ..Default::default()
        },
    )?;
    cfg.n_runs = 1;
    cfg.parallel_runs = 1;
    let summaries = run_experiment(&cfg)?;
    let s = &summaries[0];
    println!(
        "{} on {} seed {}: {} windows, max window reward {}, total cumulative reward {}, {:.1}s",
        s.method,
        cfg.env.kind(),
        s.seed,
        s.curve.len(),
        s.max_window_reward,
        s.total_cumulative_reward,
        s.wall_time
    );
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn eval(args: EvalArgs) -> pdppo::Result<()> {
    let cfg = resolve(&args.common, Overrides::default())?;
    let ck = Checkpoint::load(&args.checkpoint)?;
    let mut env = cfg.env.build(cfg.base_seed)?;
    let report = evaluate(&ck, &mut env, args.episodes, cfg.base_seed)?;
    println!(
        "{} greedy over {} episodes: mean return {} (sd {})",
        ck.kind, report.episodes, report.mean_return, report.sd_return
    );
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn bench(args: BenchArgs) -> pdppo::Result<()> {
    let cfg = resolve(
        &args.common,
        Overrides {
            steps: args.steps,
            runs: args.runs,
            parallel: args.parallel,
            out: args.out,
            ..Default::default()
        },
    )?;
    let outcome = run_benchmark(&cfg)?;
    println!("{:<8} {:>26} {:>30}", "method", "max window reward", "total cumulative reward");
    for m in &outcome.report.methods {
        println!(
            "{:<8} {:>14.4} ± {:<9.4} {:>16.4} ± {:<11.4}",
            m.method.name(),
            m.max_window_reward.mean,
            m.max_window_reward.sd,
            m.total_cumulative_reward.mean,
            m.total_cumulative_reward.sd
        );
    }
    for t in &outcome.report.tests {
        let stars = if t.significant_01 {
            "**"
        } else if t.significant_05 {
            "*"
        } else {
            ""
        };
        match t.p {
            Some(p) => println!("{} vs {} {}: t = {:.4}, p = {:.4}{stars}", t.a, t.b, t.metric, t.t.unwrap(), p),
            None => println!("{} vs {} {}: undefined ({})", t.a, t.b, t.metric, t.note.as_deref().unwrap_or("")),
        }
    }
    println!("report in {}", cfg.output_dir.join("report.json").display());
    Ok(())
}

/// Returns whether every check passed.
fn env_check(args: EnvCheckArgs) -> pdppo::Result<bool> {
    let results = run_checks(args.env, args.trials, args.seed)?;
    for r in &results {
        println!("{:<4} {:<26} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(results.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Bench(a) => bench(a).map(|_| true),
        Command::EnvCheck(a) => env_check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
