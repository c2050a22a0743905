use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GradientTape;
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 }),
        }
    }

    /// Derivative expressed through the post-activation value. relu'(0) = 0.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Output transformation applied after the last affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Linear,
    Softmax,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Linear => "linear",
            Head::Softmax => "softmax",
        }
    }
}

impl std::str::FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Head::Linear),
            "softmax" => Ok(Head::Softmax),
            other => Err(Error::Config(format!("unknown head `{other}`"))),
        }
    }
}

/// Activations recorded by [`MlpNet::forward_cached`], consumed by [`MlpNet::backward`].
///
/// `layers[k]` is the input to affine layer `k` (so `layers[0]` is the batch
/// itself); `output` is the head output.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    layers: Vec<Array2<f64>>,
    output: Option<Array2<f64>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.layers.first().map_or(0, |x| x.nrows())
    }

    pub fn output(&self) -> Option<&Array2<f64>> {
        self.output.as_ref()
    }
}

/// Multilayer perceptron: affine layers with a shared hidden activation and a
/// configurable head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    layer_sizes: Vec<usize>,
    /// `weights[k]` has shape `layer_sizes[k + 1] × layer_sizes[k]`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    activation: Activation,
    head: Head,
}

impl MlpNet {
    /// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        activation: Activation,
        head: Head,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation, head)?;
        for w in &mut net.weights {
            let (fan_out, fan_in) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-limit..=limit));
        }
        Ok(net)
    }

    pub fn zeros(layer_sizes: &[usize], activation: Activation, head: Head) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Structure(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Structure("layer sizes must be positive".into()));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|p| Array2::zeros((p[1], p[0])))
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation,
            head,
        })
    }

    pub fn from_parameters(
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        activation: Activation,
        head: Head,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Structure(
                "weights and biases must be nonempty and aligned".into(),
            ));
        }
        let mut layer_sizes = vec![weights[0].ncols()];
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != layer_sizes[k] || w.nrows() != b.len() || w.nrows() == 0 {
                return Err(Error::Structure(format!(
                    "layer {k}: weight {:?} and bias {} do not chain",
                    w.dim(),
                    b.len()
                )));
            }
            layer_sizes.push(w.nrows());
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            activation,
            head,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = (&mut Array2<f64>, &mut Array1<f64>)> {
        self.weights.iter_mut().zip(self.biases.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameters flattened layer by layer: row-major weights, then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Structure(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    /// Single-input forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::Structure(e.to_string()))?;
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut a = x.to_owned();
        for k in 0..=last {
            a = self.affine(k, &a);
            if k < last {
                self.activation.apply(&mut a);
            }
        }
        self.apply_head(&mut a);
        Ok(a)
    }

    /// Forward pass that keeps every intermediate activation for [`MlpNet::backward`].
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut layers = Vec::with_capacity(self.weights.len());
        layers.push(x.to_owned());
        for k in 0..last {
            let mut z = self.affine(k, &layers[k]);
            self.activation.apply(&mut z);
            layers.push(z);
        }
        let mut out = self.affine(last, &layers[last]);
        self.apply_head(&mut out);
        let cache = ForwardCache {
            layers,
            output: Some(out.clone()),
        };
        Ok((out, cache))
    }

    /// Accumulates ∂loss/∂θ into `tape`, given ∂loss/∂output for each batch row.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
        tape: &mut GradientTape,
    ) -> Result<()> {
        let output = cache
            .output
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a cached forward pass".into()))?;
        if cache.layers.len() != self.weights.len()
            || cache.layers[0].ncols() != self.input_dim()
        {
            return Err(Error::State(
                "forward cache was produced by a network of a different shape".into(),
            ));
        }
        if grad_output.dim() != output.dim() {
            return Err(Error::Structure(format!(
                "output gradient shape {:?} does not match output {:?}",
                grad_output.dim(),
                output.dim()
            )));
        }
        if !tape.matches(self) {
            return Err(Error::Structure("gradient tape does not match network".into()));
        }

        let mut delta = match self.head {
            Head::Linear => grad_output.to_owned(),
            Head::Softmax => {
                // dz = p ⊙ (g − ⟨p, g⟩)
                let mut d = output * &grad_output;
                let dot = d.sum_axis(Axis(1)).insert_axis(Axis(1));
                d -= &(output * &dot);
                d
            }
        };

        for k in (0..self.weights.len()).rev() {
            let input = &cache.layers[k];
            tape.weights[k] += &delta.t().dot(input);
            tape.biases[k] += &delta.sum_axis(Axis(0));
            if k > 0 {
                let mut upstream = delta.dot(&self.weights[k]);
                let act = self.activation;
                upstream.zip_mut_with(input, |g, &a| *g *= act.derivative_from_output(a));
                delta = upstream;
            }
        }
        tape.count += 1;
        Ok(())
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got != self.input_dim() {
            return Err(Error::InputShape {
                expected: self.input_dim(),
                got,
            });
        }
        Ok(())
    }

    fn affine(&self, k: usize, a: &Array2<f64>) -> Array2<f64> {
        let mut z = a.dot(&self.weights[k].t());
        z += &self.biases[k];
        z
    }

    fn apply_head(&self, z: &mut Array2<f64>) {
        if self.head == Head::Softmax {
            for mut row in z.rows_mut() {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                row /= sum;
            }
        }
    }
}
