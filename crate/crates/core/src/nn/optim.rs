use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{GradientTape, MlpNet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// First-order optimizer owning its state for exactly one network.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    first_moment: Option<(Vec<Array2<f64>>, Vec<Array1<f64>>)>,
    second_moment: Option<(Vec<Array2<f64>>, Vec<Array1<f64>>)>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Self {
            kind,
            lr,
            step: 0,
            first_moment: None,
            second_moment: None,
        })
    }

    pub fn sgd(lr: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Moves `net`'s parameters against the gradient in `tape`.
    pub fn apply(&mut self, net: &mut MlpNet, tape: &GradientTape) -> Result<()> {
        if !tape.matches(net) {
            return Err(Error::Structure(
                "gradient tape does not match network parameters".into(),
            ));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.lr;
                for ((w, b), (gw, gb)) in net.params_mut().zip(tape.weights.iter().zip(&tape.biases)) {
                    w.scaled_add(-lr, gw);
                    b.scaled_add(-lr, gb);
                }
            }
            OptimizerKind::Adam => {
                let zeros = || {
                    (
                        tape.weights.iter().map(|g| Array2::zeros(g.dim())).collect::<Vec<_>>(),
                        tape.biases.iter().map(|g| Array1::zeros(g.len())).collect::<Vec<_>>(),
                    )
                };
                let (mw, mb) = self.first_moment.get_or_insert_with(zeros);
                let (vw, vb) = self.second_moment.get_or_insert_with(zeros);
                let t = self.step as i32;
                let lr_t = self.lr * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t));
                let eps_hat = EPSILON * (1.0 - BETA2.powi(t)).sqrt();
                let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr_t * *m / (v.sqrt() + eps_hat);
                };
                for (k, (w, b)) in net.params_mut().enumerate() {
                    Zip::from(w)
                        .and(&tape.weights[k])
                        .and(&mut mw[k])
                        .and(&mut vw[k])
                        .for_each(update);
                    Zip::from(b)
                        .and(&tape.biases[k])
                        .and(&mut mb[k])
                        .and(&mut vb[k])
                        .for_each(update);
                }
            }
        }
        Ok(())
    }
}
