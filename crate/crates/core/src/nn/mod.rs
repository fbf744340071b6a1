//! The compact neural receiver: a softmax classifier on the derotated
//! matched-filter pair.
//!
//! Parameters live in one flat vector. For each layer, in order, it holds the
//! `d_out × d_in` weight matrix in row-major order followed by the `d_out`
//! biases. Hidden layers use ReLU; the last layer produces the logits.

mod checkpoint;
mod optim;

use rand::Rng;

use crate::channel::Features;
use crate::detectors::{argmax, Observation, SymbolDetector};
use crate::error::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use optim::{
    adam_step, local_train, sgd_step, AdamConfig, AdamState, LocalTrainer, Optimizer, SgdSchedule, TrainConfig,
};

/// Width of the feature vector fed to the network.
pub const FEATURE_DIM: usize = 2;

/// Affine map from the feature pair straight to 16 logits.
pub const DEFAULT_LAYER_DIMS: [usize; 2] = [2, 16];

/// A labelled training example: message index and derotated features.
pub type Sample = (usize, Features);

/// Number of parameters of a network with these layer widths.
pub fn param_count(layer_dims: &[usize]) -> usize {
    layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::config("nn.layer_dims", "need at least an input and an output width"));
    }
    if layer_dims[0] != FEATURE_DIM {
        return Err(Error::config(
            "nn.layer_dims",
            format!("input width must be {FEATURE_DIM}, got {}", layer_dims[0]),
        ));
    }
    if layer_dims.contains(&0) {
        return Err(Error::config("nn.layer_dims", "widths must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layer_dims: Vec<usize>,
    pub flat: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(ModelParams {
            layer_dims: layer_dims.to_vec(),
            flat: vec![0.0; param_count(layer_dims)],
        })
    }

    pub fn from_flat(layer_dims: &[usize], flat: Vec<f64>) -> Result<Self> {
        validate_dims(layer_dims)?;
        let want = param_count(layer_dims);
        if flat.len() != want {
            return Err(Error::input(format!(
                "parameter vector has {} entries, layer widths {layer_dims:?} need {want}",
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("parameter vector has non-finite entries"));
        }
        Ok(ModelParams {
            layer_dims: layer_dims.to_vec(),
            flat,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// `(offset, d_in, d_out)` of each layer in `flat`.
    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.layer_dims.windows(2).map(move |w| {
            let at = offset;
            offset += w[0] * w[1] + w[1];
            (at, w[0], w[1])
        })
    }

    pub(crate) fn check_same_shape(&self, other: &[f64], what: &str) -> Result<()> {
        if other.len() != self.flat.len() {
            return Err(Error::input(format!(
                "{what} has {} entries, parameters have {}",
                other.len(),
                self.flat.len()
            )));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, layer_dims: &[usize]) -> Result<ModelParams> {
    let mut p = ModelParams::zeros(layer_dims)?;
    let layers: Vec<_> = p.layers().collect();
    for (at, d_in, d_out) in layers {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        for w in &mut p.flat[at..at + d_in * d_out] {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(p)
}

/// Activations of every layer for one input; the last entry holds the logits.
fn activations(theta: &ModelParams, x: &Features) -> Vec<Vec<f64>> {
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(theta.layer_dims.len());
    acts.push(x.to_vec());
    let n_layers = theta.layer_dims.len() - 1;
    for (l, (at, d_in, d_out)) in theta.layers().enumerate() {
        let input = &acts[l];
        let w = &theta.flat[at..at + d_in * d_out];
        let b = &theta.flat[at + d_in * d_out..at + d_in * d_out + d_out];
        let mut out: Vec<f64> = (0..d_out)
            .map(|o| b[o] + w[o * d_in..(o + 1) * d_in].iter().zip(input).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        if l + 1 < n_layers {
            for v in &mut out {
                *v = v.max(0.0);
            }
        }
        acts.push(out);
    }
    acts
}

pub fn logits(theta: &ModelParams, x: &Features) -> Vec<f64> {
    activations(theta, x).pop().unwrap()
}

/// Max-shifted softmax, in place.
fn softmax_in_place(v: &mut [f64]) {
    let peak = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - peak).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Class probabilities.
pub fn forward(theta: &ModelParams, x: &Features) -> Vec<f64> {
    let mut p = logits(theta, x);
    softmax_in_place(&mut p);
    p
}

/// Most probable message, lowest index on ties. Softmax is monotone, so the
/// logits decide.
pub fn predict(theta: &ModelParams, x: &Features) -> usize {
    argmax(&logits(theta, x))
}

fn check_batch(theta: &ModelParams, batch: &[Sample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::input("empty batch"));
    }
    let m = theta.num_classes();
    if let Some((msg, _)) = batch.iter().find(|(msg, _)| *msg >= m) {
        return Err(Error::input(format!("label {msg} out of range for {m} classes")));
    }
    Ok(())
}

/// Adds the gradient of one sample's cross-entropy to `g` and returns that
/// sample's loss.
fn accumulate(theta: &ModelParams, msg: usize, x: &Features, g: &mut [f64]) -> f64 {
    let acts = activations(theta, x);
    let out = acts.last().unwrap();
    let peak = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = peak + out.iter().map(|v| (v - peak).exp()).sum::<f64>().ln();
    let loss = lse - out[msg];

    // logit gradient: softmax - onehot
    let mut delta: Vec<f64> = out.iter().map(|v| (v - lse).exp()).collect();
    delta[msg] -= 1.0;

    let layers: Vec<_> = theta.layers().collect();
    for (l, &(at, d_in, d_out)) in layers.iter().enumerate().rev() {
        let input = &acts[l];
        for o in 0..d_out {
            let row = &mut g[at + o * d_in..at + (o + 1) * d_in];
            for (gi, xi) in row.iter_mut().zip(input) {
                *gi += delta[o] * xi;
            }
            g[at + d_in * d_out + o] += delta[o];
        }
        if l > 0 {
            let w = &theta.flat[at..at + d_in * d_out];
            delta = (0..d_in)
                .map(|i| {
                    if input[i] > 0.0 {
                        (0..d_out).map(|o| w[o * d_in + i] * delta[o]).sum()
                    } else {
                        0.0
                    }
                })
                .collect();
        }
    }
    loss
}

/// Mean cross-entropy and its gradient over the batch.
pub fn loss_and_grad(theta: &ModelParams, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
    check_batch(theta, batch)?;
    let mut g = vec![0.0; theta.len()];
    let mut total = 0.0;
    for (msg, x) in batch {
        total += accumulate(theta, *msg, x, &mut g);
    }
    let inv = 1.0 / batch.len() as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    Ok((total * inv, g))
}

/// Mean cross-entropy `-(1/n) Σ ln p(msg_i | x_i)`.
pub fn loss(theta: &ModelParams, batch: &[Sample]) -> Result<f64> {
    check_batch(theta, batch)?;
    let total: f64 = batch
        .iter()
        .map(|(msg, x)| {
            let out = logits(theta, x);
            let peak = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            peak + out.iter().map(|v| (v - peak).exp()).sum::<f64>().ln() - out[*msg]
        })
        .sum();
    Ok(total / batch.len() as f64)
}

pub fn grad(theta: &ModelParams, batch: &[Sample]) -> Result<Vec<f64>> {
    Ok(loss_and_grad(theta, batch)?.1)
}

/// A trained network used as a receiver.
#[derive(Debug, Clone)]
pub struct NnDetector {
    pub params: ModelParams,
}

impl SymbolDetector for NnDetector {
    fn detect(&self, obs: &Observation) -> Result<usize> {
        Ok(predict(&self.params, &obs.features))
    }
}
