use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{EnvKind, ExperimentConfig};
use super::run::{method_dir, run_csv_path, RunSummary};
use super::stats::{aggregate, welch_t_test};
use crate::agents::AgentKind;
use crate::error::{Error, Result};

pub const RUN_CSV_HEADER: &str = "step,window_reward,cumulative_reward,actor_loss,critic_loss,post_critic_loss,entropy";
pub const AGGREGATE_CSV_HEADER: &str = "step,mean_reward,ci_low,ci_high,n";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_run_csv(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{RUN_CSV_HEADER}").map_err(io)?;
    for p in &summary.curve {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.step, p.window_reward, p.cumulative_reward, p.actor_loss, p.critic_loss, p.post_critic_loss, p.entropy
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One row of the aggregate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub step: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Mean window reward per logging step with a normal 95% band
/// (mean ± 1.96·SD/√n).
pub fn aggregate_curve(summaries: &[RunSummary]) -> Result<Vec<BandPoint>> {
    let Some(first) = summaries.first() else {
        return Err(Error::Argument("no runs to aggregate".into()));
    };
    let len = first.curve.len();
    if summaries.iter().any(|s| s.curve.len() != len) {
        return Err(Error::Argument("runs have curves of different lengths".into()));
    }
    (0..len)
        .map(|k| {
            let values: Vec<f64> = summaries.iter().map(|s| s.curve[k].window_reward).collect();
            let (mean, sd) = aggregate(&values)?;
            let half = 1.96 * sd / (values.len() as f64).sqrt();
            Ok(BandPoint {
                step: first.curve[k].step,
                mean,
                ci_low: mean - half,
                ci_high: mean + half,
                n: values.len(),
            })
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let band = aggregate_curve(summaries)?;
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{AGGREGATE_CSV_HEADER}").map_err(io)?;
    for b in band {
        writeln!(w, "{},{},{},{},{}", b.step, b.mean, b.ci_low, b.ci_high, b.n).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_config(output_dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let path = output_dir.join("config.json");
    let mut w = create(&path)?;
    w.write_all(cfg.to_json().as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    fn of(values: &[f64]) -> Result<Self> {
        let (mean, sd) = aggregate(values)?;
        Ok(Self { mean, sd, n: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: AgentKind,
    pub max_window_reward: MeanSd,
    pub total_cumulative_reward: MeanSd,
    /// Mean over runs of each run's average episode return; absent when some
    /// run never finished an episode.
    pub mean_episode_return: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: AgentKind,
    pub b: AgentKind,
    pub metric: String,
    /// Absent when the test is undefined (zero variance or fewer than two runs).
    pub t: Option<f64>,
    pub df: Option<f64>,
    /// Two-sided.
    pub p: Option<f64>,
    /// One-sided, alternative `mean(a) > mean(b)`.
    pub p_greater: Option<f64>,
    pub significant_05: bool,
    pub significant_01: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub env: EnvKind,
    pub total_steps: usize,
    pub n_runs: usize,
    pub methods: Vec<MethodMetrics>,
    pub tests: Vec<PairTest>,
}

pub const METRICS: [&str; 2] = ["max_window_reward", "total_cumulative_reward"];

fn metric_values(runs: &[RunSummary], metric: &str) -> Vec<f64> {
    runs.iter()
        .map(|s| match metric {
            "max_window_reward" => s.max_window_reward,
            "total_cumulative_reward" => s.total_cumulative_reward,
            _ => unreachable!("unknown metric {metric}"),
        })
        .collect()
}

impl ComparisonReport {
    pub fn build(cfg: &ExperimentConfig, summaries: &BTreeMap<AgentKind, Vec<RunSummary>>) -> Result<Self> {
        let order: Vec<AgentKind> = cfg
            .methods
            .iter()
            .copied()
            .filter(|m| summaries.contains_key(m))
            .collect();
        let mut methods = Vec::new();
        for &m in &order {
            let runs = &summaries[&m];
            let episode: Option<Vec<f64>> = runs.iter().map(|s| s.mean_episode_return()).collect();
            methods.push(MethodMetrics {
                method: m,
                max_window_reward: MeanSd::of(&metric_values(runs, METRICS[0]))?,
                total_cumulative_reward: MeanSd::of(&metric_values(runs, METRICS[1]))?,
                mean_episode_return: episode.map(|v| MeanSd::of(&v)).transpose()?,
            });
        }
        let mut tests = Vec::new();
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                for metric in METRICS {
                    let xa = metric_values(&summaries[&a], metric);
                    let xb = metric_values(&summaries[&b], metric);
                    tests.push(match welch_t_test(&xa, &xb) {
                        Ok(r) => PairTest {
                            a,
                            b,
                            metric: metric.to_string(),
                            t: Some(r.t),
                            df: Some(r.df),
                            p: Some(r.p),
                            p_greater: Some(r.p_greater()),
                            significant_05: r.p < 0.05,
                            significant_01: r.p < 0.01,
                            note: None,
                        },
                        Err(Error::UndefinedTest(why)) => PairTest {
                            a,
                            b,
                            metric: metric.to_string(),
                            t: None,
                            df: None,
                            p: None,
                            p_greater: None,
                            significant_05: false,
                            significant_01: false,
                            note: Some(why),
                        },
                        Err(e) => return Err(e),
                    });
                }
            }
        }
        Ok(Self {
            env: cfg.env.kind(),
            total_steps: cfg.total_steps,
            n_runs: cfg.n_runs,
            methods,
            tests,
        })
    }

    pub fn metrics(&self, method: AgentKind) -> Option<&MethodMetrics> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn test(&self, a: AgentKind, b: AgentKind, metric: &str) -> Option<&PairTest> {
        self.tests
            .iter()
            .find(|t| t.a == a && t.b == b && t.metric == metric)
    }
}

/// Writes per-run CSVs, one aggregate CSV per method, `report.json` and
/// `config.json` under `output_dir`.
pub fn emit_outputs(
    output_dir: &Path,
    cfg: &ExperimentConfig,
    summaries: &BTreeMap<AgentKind, Vec<RunSummary>>,
    report: &ComparisonReport,
) -> Result<()> {
    for (&method, runs) in summaries {
        for s in runs {
            write_run_csv(&run_csv_path(output_dir, method, s.run), s)?;
        }
        write_aggregate_csv(&method_dir(output_dir, method).join("aggregate.csv"), runs)?;
    }
    let path = output_dir.join("report.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    write_config(output_dir, cfg)
}

#[cfg(test)]
mod tests {
    use super::super::run::CurvePoint;
    use super::*;

    pub(crate) fn constant_run(method: AgentKind, run: usize, reward: f64, windows: usize) -> RunSummary {
        let curve: Vec<CurvePoint> = (0..windows)
            .map(|k| CurvePoint {
                step: (k + 1) * 10,
                window_reward: reward,
                cumulative_reward: reward * (k + 1) as f64,
                actor_loss: 0.0,
                critic_loss: 0.0,
                post_critic_loss: 0.0,
                entropy: 0.0,
            })
            .collect();
        RunSummary {
            method,
            run,
            seed: run as u64,
            max_window_reward: reward,
            total_cumulative_reward: reward * windows as f64,
            curve,
            episode_returns: vec![],
            first_minibatch_ratio_dev: 0.0,
            clipped_ratio_range: (1.0, 1.0),
            wall_time: 0.0,
        }
    }

    #[test]
    fn constant_curves_have_zero_width_band() {
        let runs: Vec<_> = (0..30).map(|r| constant_run(AgentKind::Pdppo, r, 1.0, 5)).collect();
        for b in aggregate_curve(&runs).unwrap() {
            assert_eq!((b.mean, b.ci_low, b.ci_high, b.n), (1.0, 1.0, 1.0, 30));
        }
    }

    #[test]
    fn single_run_band_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        write_aggregate_csv(&path, &[constant_run(AgentKind::Ppo, 0, 2.5, 3)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(AGGREGATE_CSV_HEADER));
        assert_eq!(lines.next(), Some("10,2.5,2.5,2.5,1"));
        assert!(aggregate_curve(&[]).is_err());
    }

    #[test]
    fn band_uses_normal_interval() {
        let runs = vec![
            constant_run(AgentKind::Ppo, 0, 2.0, 1),
            constant_run(AgentKind::Ppo, 1, 4.0, 1),
        ];
        let b = aggregate_curve(&runs).unwrap()[0];
        let half = 1.96 * 2f64.sqrt() / 2f64.sqrt();
        assert!((b.ci_low - (3.0 - half)).abs() < 1e-12);
        assert!((b.ci_high - (3.0 + half)).abs() < 1e-12);
    }

    #[test]
    fn report_flags_follow_p() {
        let mut cfg = ExperimentConfig::defaults(EnvKind::FrozenLake);
        cfg.methods = vec![AgentKind::Pdppo, AgentKind::Ppo];
        let mut summaries = BTreeMap::new();
        summaries.insert(
            AgentKind::Pdppo,
            (0..5).map(|r| constant_run(AgentKind::Pdppo, r, 10.0 + r as f64, 2)).collect(),
        );
        summaries.insert(
            AgentKind::Ppo,
            (0..5).map(|r| constant_run(AgentKind::Ppo, r, 1.0 + 0.5 * r as f64, 2)).collect(),
        );
        let report = ComparisonReport::build(&cfg, &summaries).unwrap();
        assert_eq!(report.tests.len(), 2);
        for t in &report.tests {
            let p = t.p.unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(t.significant_05, p < 0.05);
            assert_eq!(t.significant_01, p < 0.01);
            assert!(t.p_greater.unwrap() < 0.01);
        }
        assert_eq!(report.metrics(AgentKind::Pdppo).unwrap().max_window_reward.mean, 12.0);
    }

    #[test]
    fn undefined_test_is_recorded() {
        let mut cfg = ExperimentConfig::defaults(EnvKind::FrozenLake);
        cfg.methods = vec![AgentKind::Pdppo, AgentKind::Ppo];
        let mut summaries = BTreeMap::new();
        for m in cfg.methods.clone() {
            summaries.insert(m, (0..3).map(|r| constant_run(m, r, 1.0, 2)).collect::<Vec<_>>());
        }
        let report = ComparisonReport::build(&cfg, &summaries).unwrap();
        assert!(report.tests.iter().all(|t| t.p.is_none() && t.note.is_some() && !t.significant_05));
    }
}
