//! Multi-layer perceptrons with hand-written reverse-mode gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    ReLU,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::ReLU => x.max(0.0),
        }
    }

    /// Derivative expressed in terms of the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::ReLU => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One dense layer: `weight` is (out x in), bias has length `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Tensor2,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weight: Tensor2::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }
}

/// An MLP: hidden layers use `activation`, the final layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
}

/// Forward-pass intermediates needed by `backward`: the input to each layer
/// and every layer's post-activation output.
#[derive(Debug, Clone)]
pub struct MlpCache {
    layer_inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl MlpParams {
    /// Builds an MLP for the given dims `[in, h1, ..., out]` with
    /// Xavier-uniform weights (a = sqrt(6 / (fan_in + fan_out))) and zero
    /// biases.
    pub fn xavier<R: Rng>(dims: &[usize], activation: Activation, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut layer = DenseLayer::zeros(fan_out, fan_in);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in layer.weight.data_mut() {
                *v = rng.random_range(-a..a);
            }
            layers.push(layer);
        }
        Self { layers, activation }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
            activation: self.activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.cols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.rows())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        Ok(self.forward_cached(input)?.output)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<MlpCache, NeuralError> {
        let n = self.layers.len();
        let mut layer_inputs = Vec::with_capacity(n);
        let mut current = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.matvec(&current)?;
            for (v, b) in z.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            if i + 1 < n {
                for v in &mut z {
                    *v = self.activation.apply(*v);
                }
            }
            layer_inputs.push(std::mem::replace(&mut current, z));
        }
        Ok(MlpCache {
            layer_inputs,
            output: current,
        })
    }

    /// Exact gradients of `upstream · output` with respect to all parameters
    /// and the input. `grads` must be `zeros_like(self)`-shaped and is
    /// accumulated into.
    pub fn backward_accumulate(
        &self,
        cache: &MlpCache,
        upstream: &[f64],
        grads: &mut MlpParams,
    ) -> Result<Vec<f64>, NeuralError> {
        let n = self.layers.len();
        if upstream.len() != self.output_dim() {
            return Err(NeuralError::Shape {
                context: "mlp backward upstream",
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let mut delta = upstream.to_vec();
        let mut input_grad = Vec::new();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let layer_input = &cache.layer_inputs[i];
            grads.layers[i].weight.add_outer(&delta, layer_input);
            for (g, d) in grads.layers[i].bias.iter_mut().zip(&delta) {
                *g += d;
            }
            input_grad = layer.weight.matvec_transpose(&delta)?;
            if i > 0 {
                // layer_input is the previous layer's post-activation output
                for (g, a) in input_grad.iter_mut().zip(layer_input) {
                    *g *= self.activation.derivative_from_output(*a);
                }
                delta = std::mem::take(&mut input_grad);
            }
        }
        Ok(input_grad)
    }

    pub fn backward(
        &self,
        cache: &MlpCache,
        upstream: &[f64],
    ) -> Result<(MlpParams, Vec<f64>), NeuralError> {
        let mut grads = self.zeros_like();
        let input_grad = self.backward_accumulate(cache, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.data());
            out.extend_from_slice(&layer.bias);
        }
    }

    pub fn unflatten_from(&mut self, src: &[f64], offset: &mut usize) {
        for layer in &mut self.layers {
            let w = layer.weight.data_mut();
            w.copy_from_slice(&src[*offset..*offset + w.len()]);
            *offset += w.len();
            let b = &mut layer.bias;
            let len = b.len();
            b.copy_from_slice(&src[*offset..*offset + len]);
            *offset += len;
        }
    }
}
