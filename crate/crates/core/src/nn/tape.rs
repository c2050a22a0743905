use ndarray::{Array1, Array2};

use super::MlpNet;

/// Gradient buffers laid out exactly like an [`MlpNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub(super) weights: Vec<Array2<f64>>,
    pub(super) biases: Vec<Array1<f64>>,
    pub(super) count: usize,
}

impl GradientTape {
    pub fn for_net(net: &MlpNet) -> Self {
        Self {
            weights: net.weights().iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: net.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            count: 0,
        }
    }

    /// Builds a tape from explicit buffers. Mostly useful in tests.
    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Self {
        Self {
            weights,
            biases,
            count: 0,
        }
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    /// Number of backward passes accumulated since the last [`GradientTape::zero`].
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn zero(&mut self) {
        self.weights.iter_mut().for_each(|w| w.fill(0.0));
        self.biases.iter_mut().for_each(|b| b.fill(0.0));
        self.count = 0;
    }

    pub fn matches(&self, net: &MlpNet) -> bool {
        self.weights.len() == net.weights().len()
            && self
                .weights
                .iter()
                .zip(net.weights())
                .all(|(g, w)| g.dim() == w.dim())
            && self
                .biases
                .iter()
                .zip(net.biases())
                .all(|(g, b)| g.len() == b.len())
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self
            .weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .map(|g| g * g)
            .sum();
        sq.sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    /// Rescales all gradients so their joint ℓ2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        assert!(max_norm > 0.0, "max_norm must be positive");
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
        norm
    }
}
