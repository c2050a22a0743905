use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::ExperimentConfig;
use super::output::{self, ComparisonReport};
use crate::agents::{train, Agent, AgentKind, RunLog};
use crate::error::{Error, Result};

/// One row of a per-run CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub window_reward: f64,
    pub cumulative_reward: f64,
    pub actor_loss: f64,
    /// Pre-decision critic loss (the only critic for PPO and PDPPO1C); 0 when absent.
    pub critic_loss: f64,
    /// Post-decision critic loss for PDPPO; 0 otherwise.
    pub post_critic_loss: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: AgentKind,
    pub run: usize,
    pub seed: u64,
    pub max_window_reward: f64,
    pub total_cumulative_reward: f64,
    pub curve: Vec<CurvePoint>,
    /// Undiscounted return of every finished episode.
    pub episode_returns: Vec<f64>,
    /// Largest `|ρ − 1|` seen in the first minibatch of any update.
    pub first_minibatch_ratio_dev: f64,
    /// Range of the clipped ratio over every update of the run.
    pub clipped_ratio_range: (f64, f64),
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

impl RunSummary {
    pub fn from_log(log: &RunLog, run: usize, wall_time: f64) -> Self {
        let curve = log
            .windows
            .iter()
            .map(|w| {
                // PDPPO1C's single critic lives in the post-decision slot.
                let (critic_loss, post_critic_loss) = match log.kind {
                    AgentKind::Pdppo1c => (w.stats.post_critic_loss, 0.0),
                    _ => (w.stats.critic_loss, w.stats.post_critic_loss),
                };
                CurvePoint {
                    step: w.step,
                    window_reward: w.window_reward,
                    cumulative_reward: w.cumulative_reward,
                    actor_loss: w.stats.actor_loss,
                    critic_loss,
                    post_critic_loss,
                    entropy: w.stats.entropy,
                }
            })
            .collect();
        Self {
            method: log.kind,
            run,
            seed: log.seed,
            max_window_reward: log.max_window_reward(),
            total_cumulative_reward: log.total_cumulative_reward(),
            curve,
            episode_returns: log.episode_returns.clone(),
            first_minibatch_ratio_dev: log
                .windows
                .iter()
                .map(|w| w.stats.first_minibatch_ratio_dev)
                .fold(0.0, f64::max),
            clipped_ratio_range: log.windows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(w.stats.min_clipped_ratio), hi.max(w.stats.max_clipped_ratio))
            }),
            wall_time,
        }
    }

    pub fn reward_curve(&self) -> Vec<(usize, f64)> {
        self.curve.iter().map(|p| (p.step, p.window_reward)).collect()
    }

    pub fn mean_episode_return(&self) -> Option<f64> {
        (!self.episode_returns.is_empty())
            .then(|| self.episode_returns.iter().sum::<f64>() / self.episode_returns.len() as f64)
    }
}

/// Trains one (method, run) pair in memory.
pub fn run_single(cfg: &ExperimentConfig, method: AgentKind, run: usize) -> Result<(RunSummary, RunLog, Agent)> {
    let seed = cfg.run_seed(run);
    let env = cfg.env.build(seed)?;
    let start = Instant::now();
    let (log, agent) = train(method, env, cfg.agent_config.clone(), cfg.total_steps, seed)?;
    let summary = RunSummary::from_log(&log, run, start.elapsed().as_secs_f64());
    Ok((summary, log, agent))
}

pub fn method_dir(output_dir: &Path, method: AgentKind) -> PathBuf {
    output_dir.join(method.name())
}

pub fn run_csv_path(output_dir: &Path, method: AgentKind, run: usize) -> PathBuf {
    method_dir(output_dir, method).join(format!("run_{run:03}.csv"))
}

pub fn checkpoint_path(output_dir: &Path, method: AgentKind, run: usize) -> PathBuf {
    method_dir(output_dir, method).join(format!("run_{run:03}.ckpt"))
}

fn persist_run(cfg: &ExperimentConfig, summary: &RunSummary, agent: &Agent) -> Result<()> {
    let dir = method_dir(&cfg.output_dir, summary.method);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    output::write_run_csv(&run_csv_path(&cfg.output_dir, summary.method, summary.run), summary)?;
    let json = dir.join(format!("run_{:03}.json", summary.run));
    std::fs::write(&json, serde_json::to_string_pretty(summary)?).map_err(|e| Error::io(&json, e))?;
    Checkpoint::from_agent(agent).save(checkpoint_path(&cfg.output_dir, summary.method, summary.run))
}

/// Runs `jobs` closures on `workers` threads. Results come back in job order,
/// so the outcome does not depend on scheduling. The first failure stops
/// workers from picking up new jobs.
pub fn pool<T, F>(jobs: usize, workers: usize, f: F) -> std::result::Result<Vec<T>, (usize, Error)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.max(1)) {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let job = next.fetch_add(1, Ordering::SeqCst);
                if job >= jobs {
                    break;
                }
                let result = f(job);
                if result.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                slots.lock().unwrap()[job] = Some(result);
            });
        }
    });
    let mut out = Vec::with_capacity(jobs);
    for (job, slot) in slots.into_inner().unwrap().into_iter().enumerate() {
        match slot {
            Some(Ok(v)) => out.push(v),
            Some(Err(e)) => return Err((job, e)),
            // skipped after an earlier failure; that failure is reported instead
            None => continue,
        }
    }
    Ok(out)
}

fn run_jobs(cfg: &ExperimentConfig, methods: &[AgentKind]) -> Result<BTreeMap<AgentKind, Vec<RunSummary>>> {
    cfg.validate()?;
    let jobs: Vec<(AgentKind, usize)> = methods
        .iter()
        .flat_map(|&m| (0..cfg.n_runs).map(move |r| (m, r)))
        .collect();
    let summaries = pool(jobs.len(), cfg.parallel_runs, |job| {
        let (method, run) = jobs[job];
        let (summary, _, agent) = run_single(cfg, method, run)?;
        persist_run(cfg, &summary, &agent)?;
        Ok(summary)
    })
    .map_err(|(job, e)| Error::Run {
        run: jobs[job].1,
        source: Box::new(e),
    })?;
    let mut by_method: BTreeMap<AgentKind, Vec<RunSummary>> = BTreeMap::new();
    for s in summaries {
        by_method.entry(s.method).or_default().push(s);
    }
    Ok(by_method)
}

/// Trains `cfg.agent` for `n_runs` seeds and persists every run plus the
/// aggregate curve and config snapshot.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    let mut by_method = run_jobs(cfg, &[cfg.agent])?;
    let summaries = by_method.remove(&cfg.agent).unwrap_or_default();
    output::write_config(&cfg.output_dir, cfg)?;
    output::write_aggregate_csv(
        &method_dir(&cfg.output_dir, cfg.agent).join("aggregate.csv"),
        &summaries,
    )?;
    Ok(summaries)
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub summaries: BTreeMap<AgentKind, Vec<RunSummary>>,
    pub report: ComparisonReport,
}

/// Every (method × seed) combination, followed by the comparison report.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchOutcome> {
    let summaries = run_jobs(cfg, &cfg.methods)?;
    let report = ComparisonReport::build(cfg, &summaries)?;
    output::emit_outputs(&cfg.output_dir, cfg, &summaries, &report)?;
    Ok(BenchOutcome { summaries, report })
}
