//! Dense tanh multilayer perceptrons with exact manual backpropagation.
//!
//! These networks play two roles: the pointwise mean function and the
//! feature map of the deep kernel. Parameters live in one flat vector per
//! network so the particle machinery can treat a hypothesis as a plain
//! point in R^d.
//!
//! Layout of the flat vector: per layer, weights (out x in, row-major)
//! followed by biases (out). Hidden layers apply tanh; the output layer is
//! linear so regression targets are not squashed.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

/// Architecture of one network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = MlpSpec {
            input_dim,
            hidden_dims,
            output_dim,
            activation: Activation::Tanh,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() {
            return Err(Error::config("hidden_dims: must be non-empty"));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::config("mlp dims: all dimensions must be >= 1"));
        }
        Ok(())
    }

    /// `(in, out)` per layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    /// Total parameter count; a pure function of the dims.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(i, o)| (i + 1) * o)
            .sum()
    }
}

/// One network's parameters, flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    values: Vec<f64>,
    spec: MlpSpec,
}

impl FlatParams {
    pub fn new(spec: MlpSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::shape(format!(
                "flat params length {} != spec count {}",
                values.len(),
                spec.param_count()
            )));
        }
        Ok(FlatParams { values, spec })
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let n = spec.param_count();
        FlatParams {
            values: vec![0.0; n],
            spec,
        }
    }

    /// Weights ~ N(0, 1/fan_in), biases 0. Keeps tanh near its linear
    /// regime at the start.
    pub fn init<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(spec.param_count());
        for (fan_in, out) in spec.layer_dims() {
            let dist = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).unwrap();
            for _ in 0..fan_in * out {
                values.push(dist.sample(rng));
            }
            values.resize(values.len() + out, 0.0);
        }
        FlatParams { values, spec }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Batched forward pass: `x` is batch x input_dim, output batch x output_dim.
pub fn mlp_forward(params: &FlatParams, x: &Matrix) -> Result<Matrix> {
    Ok(forward_with_cache(params, x)?.0)
}

/// Forward pass keeping every layer's activation (input included) for
/// the backward pass.
fn forward_with_cache(params: &FlatParams, x: &Matrix) -> Result<(Matrix, Vec<Matrix>)> {
    let spec = &params.spec;
    if x.cols() != spec.input_dim {
        return Err(Error::shape(format!(
            "mlp input has {} columns, spec expects {}",
            x.cols(),
            spec.input_dim
        )));
    }
    let dims = spec.layer_dims();
    let n_layers = dims.len();
    let mut acts: Vec<Matrix> = Vec::with_capacity(n_layers + 1);
    acts.push(x.clone());
    let mut offset = 0;
    for (layer, &(fan_in, out)) in dims.iter().enumerate() {
        let weights = &params.values[offset..offset + fan_in * out];
        let biases = &params.values[offset + fan_in * out..offset + (fan_in + 1) * out];
        offset += (fan_in + 1) * out;
        let prev = acts.last().unwrap();
        let is_hidden = layer + 1 < n_layers;
        let mut next = Matrix::zeros(prev.rows(), out);
        for b in 0..prev.rows() {
            let row = prev.row(b);
            for o in 0..out {
                let w = &weights[o * fan_in..(o + 1) * fan_in];
                let mut z = biases[o];
                for (wi, xi) in w.iter().zip(row) {
                    z += wi * xi;
                }
                next.set(b, o, if is_hidden { z.tanh() } else { z });
            }
        }
        acts.push(next);
    }
    let out = acts.last().unwrap().clone();
    Ok((out, acts))
}

/// Exact reverse-mode gradient of `sum(upstream .* mlp_forward(params, x))`
/// with respect to every parameter.
pub fn mlp_backward(params: &FlatParams, x: &Matrix, upstream: &Matrix) -> Result<Vec<f64>> {
    let spec = &params.spec;
    let (out, acts) = forward_with_cache(params, x)?;
    if upstream.rows() != out.rows() || upstream.cols() != out.cols() {
        return Err(Error::shape(format!(
            "upstream is {}x{}, forward output is {}x{}",
            upstream.rows(),
            upstream.cols(),
            out.rows(),
            out.cols()
        )));
    }
    let dims = spec.layer_dims();
    let mut grad = vec![0.0; params.values.len()];

    // offsets of each layer's block in the flat vector
    let mut offsets = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &(fan_in, out_dim) in &dims {
        offsets.push(acc);
        acc += (fan_in + 1) * out_dim;
    }

    let mut delta = upstream.clone();
    for layer in (0..dims.len()).rev() {
        let (fan_in, out_dim) = dims[layer];
        let offset = offsets[layer];
        let prev = &acts[layer];
        let batch = prev.rows();

        // weight and bias gradients
        for o in 0..out_dim {
            let wgrad = &mut grad[offset + o * fan_in..offset + (o + 1) * fan_in];
            let mut bgrad = 0.0;
            for b in 0..batch {
                let d = delta.get(b, o);
                bgrad += d;
                for (g, &xi) in wgrad.iter_mut().zip(prev.row(b)) {
                    *g += d * xi;
                }
            }
            grad[offset + fan_in * out_dim + o] = bgrad;
        }

        // propagate to the previous layer through W and tanh'
        if layer > 0 {
            let weights = &params.values[offset..offset + fan_in * out_dim];
            let mut prev_delta = Matrix::zeros(batch, fan_in);
            for b in 0..batch {
                for o in 0..out_dim {
                    let d = delta.get(b, o);
                    if d == 0.0 {
                        continue;
                    }
                    let w = &weights[o * fan_in..(o + 1) * fan_in];
                    for (i, &wi) in w.iter().enumerate() {
                        prev_delta.set(b, i, prev_delta.get(b, i) + d * wi);
                    }
                }
                // prev holds tanh outputs, so tanh' = 1 - a^2
                for i in 0..fan_in {
                    let a = prev.get(b, i);
                    prev_delta.set(b, i, prev_delta.get(b, i) * (1.0 - a * a));
                }
            }
            delta = prev_delta;
        }
    }
    Ok(grad)
}
