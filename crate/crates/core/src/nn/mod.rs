//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Everything here works on row-major minibatches: a batch of `B` inputs is a
//! `B × in` matrix and produces a `B × out` matrix. Single-vector helpers wrap
//! the batch path.

mod mlp;
mod optim;
mod tape;

pub use mlp::{Activation, ForwardCache, Head, MlpNet};
pub use optim::{Optimizer, OptimizerKind};
pub use tape::GradientTape;
