//! Minimal feed-forward network used as the controller in every environment.
//!
//! Parameters live in a single flat vector so the same θ moves between the
//! sampler, the optimizers and serialized results without reshaping. Packing
//! order is fixed: layer by layer, weights before biases, weights in (k, j)
//! row-major order where `k` indexes the source node in layer `l-1` and `j`
//! the target node in layer `l`.

use crate::error::{Error, Result};

/// Output-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Softmax,
    Identity,
}

/// Layer sizes plus activation tags. `layers[0]` is the input width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    pub layers: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl NetworkShape {
    /// Standard controller shape: two hidden layers of three tanh nodes.
    pub fn controller(inputs: usize, outputs: usize, output: Activation) -> Self {
        Self {
            layers: vec![inputs, 3, 3, outputs],
            hidden: Activation::Tanh,
            output,
        }
    }

    pub fn new(layers: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        if layers.len() < 2 || layers.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "network needs >= 1 layer of positive width, got {layers:?}"
            )));
        }
        Ok(Self {
            layers,
            hidden,
            output,
        })
    }

    pub fn input_len(&self) -> usize {
        self.layers[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layers.last().unwrap()
    }

    /// Total parameter count S = Σ_l (d_{l-1}·d_l + d_l).
    pub fn param_count(&self) -> usize {
        self.layers.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// A flat parameter vector bound to a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatParams {
    pub values: Vec<f64>,
    pub shape: NetworkShape,
}

impl FlatParams {
    pub fn new(values: Vec<f64>, shape: NetworkShape) -> Result<Self> {
        if values.len() != shape.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters for shape {:?}, got {}",
                shape.param_count(),
                shape.layers,
                values.len()
            )));
        }
        Ok(Self { values, shape })
    }

    pub fn zeros(shape: NetworkShape) -> Self {
        Self {
            values: vec![0.0; shape.param_count()],
            shape,
        }
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

fn apply_hidden(act: Activation, x: f64) -> f64 {
    match act {
        Activation::Tanh => x.tanh(),
        Activation::Sigmoid => sigmoid(x),
        Activation::Identity => x,
        Activation::Softmax => panic!("softmax is an output-layer activation"),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Forward pass. Pure: same parameters and input always give the same output.
pub fn forward(params: &FlatParams, input: &[f64]) -> Result<Vec<f64>> {
    let shape = &params.shape;
    if input.len() != shape.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "input length {} != d0 {}",
            input.len(),
            shape.input_len()
        )));
    }
    let n_layers = shape.layers.len() - 1;
    let mut activ = input.to_vec();
    let mut offset = 0usize;
    for l in 0..n_layers {
        let (d_in, d_out) = (shape.layers[l], shape.layers[l + 1]);
        let weights = &params.values[offset..offset + d_in * d_out];
        let biases = &params.values[offset + d_in * d_out..offset + d_in * d_out + d_out];
        offset += d_in * d_out + d_out;
        let mut next = biases.to_vec();
        for (k, &a) in activ.iter().enumerate() {
            let row = &weights[k * d_out..(k + 1) * d_out];
            for (j, &w) in row.iter().enumerate() {
                next[j] += a * w;
            }
        }
        let last = l + 1 == n_layers;
        if last {
            match shape.output {
                Activation::Softmax => softmax_in_place(&mut next),
                act => next.iter_mut().for_each(|x| *x = apply_hidden(act, *x)),
            }
        } else {
            next.iter_mut()
                .for_each(|x| *x = apply_hidden(shape.hidden, *x));
        }
        activ = next;
    }
    Ok(activ)
}

/// Softmax restricted to a valid-action mask. Invalid entries are treated as
/// logit −∞ and get probability exactly 0. Ties in the argmax break toward
/// the lowest index.
pub fn softmax_over_valid(logits: &[f64], valid: &[bool]) -> Result<(Vec<f64>, usize)> {
    if logits.len() != valid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logits vs {} mask entries",
            logits.len(),
            valid.len()
        )));
    }
    let max = logits
        .iter()
        .zip(valid)
        .filter(|(_, &v)| v)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoValidAction);
    }
    let mut probs = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for (i, (&l, &v)) in logits.iter().zip(valid).enumerate() {
        if v {
            probs[i] = (l - max).exp();
            sum += probs[i];
        }
    }
    let mut argmax = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    for (i, p) in probs.iter_mut().enumerate() {
        *p /= sum;
        if valid[i] && *p > best {
            best = *p;
            argmax = i;
        }
    }
    Ok((probs, argmax))
}

/// A labelled classification batch: inputs plus one-hot targets.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Predicted probabilities are floored at 1e-300 inside logs so an early
/// saturated softmax cannot poison the loss with NaNs.
const LOG_FLOOR: f64 = 1e-300;

/// Cross-entropy loss with an L2 penalty:
/// `−Σ_i Σ_k y_ik log a_k(i)^L + ||θ||²/(2σ²)`.
pub fn cross_entropy_l2(params: &FlatParams, data: &Dataset, sigma2: f64) -> Result<f64> {
    let mut loss = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let p = forward(params, x)?;
        for (pk, yk) in p.iter().zip(y) {
            if *yk != 0.0 {
                loss -= yk * pk.max(LOG_FLOOR).ln();
            }
        }
    }
    Ok(loss + params.norm2() / (2.0 * sigma2))
}

/// Gradient of [`cross_entropy_l2`] via backpropagation through the tanh
/// hidden layers and the softmax head. The `(S/2)·log(2πσ²)` term of the
/// full negative log posterior does not depend on θ and contributes nothing.
pub fn grad_cross_entropy_l2(
    params: &FlatParams,
    data: &Dataset,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let shape = &params.shape;
    if shape.output != Activation::Softmax {
        return Err(Error::InvalidParameter(
            "cross-entropy gradient requires a softmax output head".into(),
        ));
    }
    if shape.hidden != Activation::Tanh {
        return Err(Error::InvalidParameter(
            "backprop implemented for tanh hidden layers".into(),
        ));
    }
    let n_layers = shape.layers.len() - 1;
    // penalty term θ/σ²
    let mut grad: Vec<f64> = params.values.iter().map(|&t| t / sigma2).collect();

    let mut layer_offsets = Vec::with_capacity(n_layers);
    let mut off = 0usize;
    for l in 0..n_layers {
        layer_offsets.push(off);
        off += shape.layers[l] * shape.layers[l + 1] + shape.layers[l + 1];
    }

    for (x, y) in data.inputs.iter().zip(&data.targets) {
        if x.len() != shape.input_len() || y.len() != shape.output_len() {
            return Err(Error::ShapeMismatch(
                "dataset row does not match network shape".into(),
            ));
        }
        // forward, keeping activations per layer
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.clone());
        for l in 0..n_layers {
            let (d_in, d_out) = (shape.layers[l], shape.layers[l + 1]);
            let base = layer_offsets[l];
            let weights = &params.values[base..base + d_in * d_out];
            let biases = &params.values[base + d_in * d_out..base + d_in * d_out + d_out];
            let mut z = biases.to_vec();
            for (k, &a) in acts[l].iter().enumerate() {
                for j in 0..d_out {
                    z[j] += a * weights[k * d_out + j];
                }
            }
            if l + 1 == n_layers {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        // delta at the softmax head: p − y
        let mut delta: Vec<f64> = acts[n_layers]
            .iter()
            .zip(y)
            .map(|(p, yk)| p - yk)
            .collect();
        for l in (0..n_layers).rev() {
            let (d_in, d_out) = (shape.layers[l], shape.layers[l + 1]);
            let base = layer_offsets[l];
            for (k, &a) in acts[l].iter().enumerate() {
                for j in 0..d_out {
                    grad[base + k * d_out + j] += a * delta[j];
                }
            }
            for j in 0..d_out {
                grad[base + d_in * d_out + j] += delta[j];
            }
            if l > 0 {
                let weights = &params.values[base..base + d_in * d_out];
                let mut prev = vec![0.0; d_in];
                for k in 0..d_in {
                    let mut s = 0.0;
                    for j in 0..d_out {
                        s += weights[k * d_out + j] * delta[j];
                    }
                    // tanh'(z) = 1 − a²
                    prev[k] = s * (1.0 - acts[l][k] * acts[l][k]);
                }
                delta = prev;
            }
        }
    }
    Ok(grad)
}
