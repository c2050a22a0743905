use std::collections::BTreeMap;
use std::fs;

use pdppo::agents::{AgentConfig, AgentKind};
use pdppo::env::FrozenLakeConfig;
use pdppo::harness::{
    evaluate, run_benchmark, run_experiment, Checkpoint, EnvKind, EnvSpec, ExperimentConfig, RunSummary,
};
use pdppo::Error;
use tempfile::TempDir;

fn tiny(dir: &TempDir) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(EnvKind::FrozenLake);
    cfg.env = EnvSpec::FrozenLake(FrozenLakeConfig {
        n: 4,
        m: 4,
        hole_prob: 0.2,
        ..FrozenLakeConfig::default()
    });
    cfg.agent_config = AgentConfig {
        window: 40,
        epochs: 2,
        minibatch_size: Some(10),
        hidden: vec![8],
        ..AgentConfig::frozen_lake()
    };
    cfg.total_steps = 120;
    cfg.n_runs = 1;
    cfg.output_dir = dir.path().to_path_buf();
    cfg
}

fn without_time(mut runs: Vec<RunSummary>) -> Vec<RunSummary> {
    runs.iter_mut().for_each(|s| s.wall_time = 0.0);
    runs
}

#[test]
fn single_run_writes_its_files() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny(&dir);
    let runs = run_experiment(&cfg).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].curve.len(), 3);
    for f in ["config.json", "pdppo/run_000.csv", "pdppo/run_000.json", "pdppo/run_000.ckpt", "pdppo/aggregate.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let snapshot = fs::read_to_string(dir.path().join("config.json")).unwrap();
    assert_eq!(ExperimentConfig::from_json(&snapshot).unwrap(), cfg);
    let csv = fs::read_to_string(dir.path().join("pdppo/run_000.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn repeated_runs_match_exactly() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ra = run_experiment(&tiny(&a)).unwrap();
    let rb = run_experiment(&tiny(&b)).unwrap();
    assert_eq!(without_time(ra), without_time(rb));
    let csv = |d: &TempDir| fs::read(d.path().join("pdppo/run_000.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut serial = tiny(&a);
    serial.n_runs = 4;
    let mut parallel = tiny(&b);
    parallel.n_runs = 4;
    parallel.parallel_runs = 4;
    let rs = without_time(run_experiment(&serial).unwrap());
    let rp = without_time(run_experiment(&parallel).unwrap());
    assert_eq!(rs, rp);
    assert_eq!(rs.iter().map(|s| s.seed).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
}

#[test]
fn benchmark_report_agrees_with_persisted_runs() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny(&dir);
    cfg.methods = vec![AgentKind::Pdppo, AgentKind::Ppo];
    cfg.n_runs = 3;
    cfg.base_seed = 10;
    let outcome = run_benchmark(&cfg).unwrap();
    assert!(dir.path().join("report.json").is_file());
    for method in [AgentKind::Pdppo, AgentKind::Ppo] {
        let persisted: Vec<RunSummary> = (0..3)
            .map(|r| {
                let path = dir.path().join(format!("{}/run_{r:03}.json", method.name()));
                serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
            })
            .collect();
        assert_eq!(persisted, outcome.summaries[&method]);
        let mean = persisted.iter().map(|s| s.total_cumulative_reward).sum::<f64>() / 3.0;
        let reported = outcome.report.metrics(method).unwrap().total_cumulative_reward.mean;
        assert!((mean - reported).abs() <= 1e-9 * mean.abs().max(1.0));
    }
    assert!(outcome.report.test(AgentKind::Pdppo, AgentKind::Ppo, "max_window_reward").is_some());
    assert!(!dir.path().join("pdppo1c").exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["n_runs"], 3);
}

#[test]
fn failed_run_names_its_index() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny(&dir);
    let blocker = dir.path().join("blocked");
    fs::write(&blocker, "not a directory").unwrap();
    cfg.output_dir = blocker;
    cfg.n_runs = 2;
    match run_experiment(&cfg) {
        Err(Error::Run { run, source }) => {
            assert_eq!(run, 0);
            assert!(matches!(*source, Error::Io { .. }));
        }
        other => panic!("expected a run error, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let mut cfg = tiny(&dir);
    cfg.total_steps = 10;
    assert!(run_experiment(&cfg).unwrap_err().is_config_error());
    let mut cfg = tiny(&dir);
    cfg.methods = vec![AgentKind::Ppo, AgentKind::Ppo];
    assert!(run_benchmark(&cfg).unwrap_err().is_config_error());
    assert!(ExperimentConfig::from_json(r#"{"agent": "ppo"}"#).unwrap_err().is_config_error());
}

#[test]
fn checkpoints_reload_and_evaluate() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny(&dir);
    let (summary, _, agent) = pdppo::harness::run_single(&cfg, AgentKind::Pdppo1c, 0).unwrap();
    assert_eq!(summary.method, AgentKind::Pdppo1c);
    let path = dir.path().join("a.ckpt");
    Checkpoint::from_agent(&agent).save(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    let back = ck.clone().into_agent().unwrap();
    assert_eq!(back.actor().params_flat(), agent.actor().params_flat());
    assert_eq!(
        back.post_critic().unwrap().params_flat(),
        agent.post_critic().unwrap().params_flat()
    );

    let mut env = cfg.env.build(cfg.base_seed).unwrap();
    let first = evaluate(&ck, &mut env, 20, 3).unwrap();
    let second = evaluate(&ck, &mut env, 20, 3).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.returns.len(), 20);

    let mut other = EnvSpec::default_for(EnvKind::LotSizing).build(0).unwrap();
    assert!(matches!(evaluate(&ck, &mut other, 5, 0), Err(Error::Structure(_))));
}

#[test]
fn lot_sizing_instance_ignores_run_seed() {
    let spec = EnvSpec::default_for(EnvKind::LotSizing);
    let params = |seed| match spec.build(seed).unwrap() {
        pdppo::harness::AnyEnv::LotSizing(env) => env.params().clone(),
        _ => unreachable!(),
    };
    assert_eq!(params(0), params(7));
    let grids: BTreeMap<u64, String> = (0..2)
        .map(|s| match EnvSpec::default_for(EnvKind::FrozenLake).build(s).unwrap() {
            pdppo::harness::AnyEnv::FrozenLake(env) => (s, format!("{:?}", env.grid())),
            _ => unreachable!(),
        })
        .collect();
    assert_ne!(grids[&0], grids[&1]);
}

#[test]
fn shipped_configs_resolve() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::resolve(Some(&path), &Default::default()).unwrap();
        let name = path.file_stem().unwrap().to_str().unwrap();
        let kind = if name.starts_with("frozen") { EnvKind::FrozenLake } else { EnvKind::LotSizing };
        assert_eq!(cfg.env.kind(), kind, "{name}");
        assert_eq!(cfg.methods.len(), 3);
        seen += 1;
    }
    assert_eq!(seen, 6);
    let desk = ExperimentConfig::resolve(Some(&dir.join("frozen_lake_desk.json")), &Default::default()).unwrap();
    let mut expected = ExperimentConfig::frozen_lake_desk();
    expected.output_dir = "runs/frozen_lake_desk".into();
    assert_eq!(desk, expected);
    let desk = ExperimentConfig::resolve(Some(&dir.join("lot_sizing_desk.json")), &Default::default()).unwrap();
    let mut expected = ExperimentConfig::lot_sizing_desk();
    expected.output_dir = "runs/lot_sizing_desk".into();
    assert_eq!(desk, expected);
}
