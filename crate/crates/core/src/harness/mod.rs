//! Multi-seed experiments: configuration, execution, statistics and
//! persistence.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! config.json                 resolved configuration
//! report.json                 comparison report (bench only)
//! <method>/run_NNN.csv        per-window curve of run NNN
//! <method>/run_NNN.json       run summary, including episode returns
//! <method>/run_NNN.ckpt       final parameters (see `checkpoint`)
//! <method>/aggregate.csv      mean window reward with 95% band
//! ```

pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod output;
pub mod run;
pub mod stats;

pub use checkpoint::Checkpoint;
pub use config::{AnyEnv, EnvKind, EnvSpec, ExperimentConfig, Overrides};
pub use eval::{evaluate, EvalReport};
pub use output::{aggregate_curve, emit_outputs, ComparisonReport, MeanSd, MethodMetrics, PairTest};
pub use run::{pool, run_benchmark, run_experiment, run_single, BenchOutcome, CurvePoint, RunSummary};
pub use stats::{aggregate, welch_t_test, WelchResult};
