//! Post-decision proximal policy optimization.
//!
//! PPO variants that learn from both pre-decision states `s` and
//! post-decision states `s^x`, two benchmark environments built around that
//! split, and a multi-seed experiment harness.

pub mod agents;
pub mod checks;
pub mod env;
mod error;
pub mod harness;
pub mod nn;

pub use error::{Error, Result};
