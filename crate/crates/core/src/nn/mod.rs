//! A small fully-connected network engine: forward pass, softmax
//! cross-entropy, backpropagation, Adam and mini-batch training.
//!
//! Networks here have at most a few thousand parameters, so everything is
//! plain `Vec<f64>` arithmetic, one sample at a time.

mod adam;
mod arch;
mod io;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use adam::{AdamConfig, AdamState};
pub use arch::{build_arch, layout, DetectorPurpose};
pub use train::{epochs_for, Dataset, TrainLog, TrainSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Format(format!("unknown activation `{other}`"))),
        }
    }
}

/// One fully-connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend(self.weights.chunks_exact(self.inputs).zip(&self.biases).map(|(row, b)| {
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
        }));
    }
}

fn activate(act: Activation, z: &[f64], out: &mut Vec<f64>) {
    out.clear();
    match act {
        Activation::Sigmoid => out.extend(z.iter().map(|&v| 1.0 / (1.0 + (-v).exp()))),
        Activation::Relu => out.extend(z.iter().map(|&v| v.max(0.0))),
        Activation::Softmax => {
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.extend(z.iter().map(|&v| (v - max).exp()));
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|v| *v /= total);
        }
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Per-layer weight and bias arrays shaped like an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(m: &Mlp) -> Self {
        Gradients {
            weights: m.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: m.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Flattened in layer order, weights before biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Multilayer perceptron with a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Zero-initialized network. `sizes` starts with the input width;
    /// `activations` has one entry per layer and must end in softmax.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::Contract(format!(
                "{} sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Contract("layer sizes must be positive".into()));
        }
        let (last, hidden) = activations.split_last().expect("non-empty");
        if *last != Activation::Softmax || hidden.contains(&Activation::Softmax) {
            return Err(Error::Contract("softmax is required on, and only on, the output layer".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(io, &activation)| Layer {
                inputs: io[0],
                outputs: io[1],
                activation,
                weights: vec![0.0; io[0] * io[1]],
                biases: vec![0.0; io[1]],
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(sizes, activations)?;
        for l in &mut m.layers {
            let limit = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            l.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..=limit));
        }
        Ok(m)
    }

    pub(crate) fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let mut sizes = vec![layers.first().map_or(0, |l| l.inputs)];
        let mut acts = Vec::new();
        for (i, l) in layers.iter().enumerate() {
            if l.inputs != sizes[i] || l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Format(format!("layer {i} has inconsistent shape")));
            }
            sizes.push(l.outputs);
            acts.push(l.activation);
        }
        Self::zeros(&sizes, &acts)?;
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    /// Layer widths, input first.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    /// Trainable parameters, `Σ (in·out + out)`.
    pub fn count_params(&self) -> usize {
        self.layers.iter().map(|l| l.inputs * l.outputs + l.outputs).sum()
    }

    /// Real multiplications per forward pass, `Σ in·out`.
    pub fn count_rmps(&self) -> usize {
        self.layers.iter().map(|l| l.inputs * l.outputs).sum()
    }

    /// All parameters, flattened in the order of [`Gradients::flat`].
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.count_params() {
            return Err(Error::Contract(format!(
                "{} parameters given, network has {}",
                flat.len(),
                self.count_params()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::Contract(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for l in &self.layers {
            l.affine(&a, &mut z);
            activate(l.activation, &z, &mut a);
        }
        Ok(a)
    }

    /// Index of the most probable class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.forward(x)?;
        Ok(argmax(&p))
    }

    /// Mean softmax cross-entropy over a batch and its gradient.
    ///
    /// `features` holds `labels.len()` rows of `input_size()` values.
    pub fn loss_and_grad(&self, features: &[f64], labels: &[usize]) -> Result<(f64, Gradients)> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Empty("batch"));
        }
        let dim = self.input_size();
        if features.len() != n * dim {
            return Err(Error::Contract(format!(
                "{} feature values for {n} samples of width {dim}",
                features.len()
            )));
        }
        let classes = self.output_size();
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }

        let depth = self.layers.len();
        let mut grads = Gradients::zeros_like(self);
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
        let mut pre: Vec<Vec<f64>> = vec![Vec::new(); depth];
        let mut delta = Vec::new();
        let mut prev = Vec::new();
        let mut loss = 0.0;

        for (x, &label) in features.chunks_exact(dim).zip(labels) {
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for (i, l) in self.layers.iter().enumerate() {
                let (head, tail) = acts.split_at_mut(i + 1);
                l.affine(&head[i], &mut pre[i]);
                activate(l.activation, &pre[i], &mut tail[0]);
            }
            let logits = &pre[depth - 1];
            loss += log_sum_exp(logits) - logits[label];

            delta.clear();
            delta.extend_from_slice(&acts[depth]);
            delta[label] -= 1.0;

            for i in (0..depth).rev() {
                let l = &self.layers[i];
                let input = &acts[i];
                let gw = &mut grads.weights[i];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                        row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                    }
                    grads.biases[i][o] += d;
                }
                if i == 0 {
                    break;
                }
                prev.clear();
                prev.resize(l.inputs, 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                        prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                    }
                }
                let below = &self.layers[i - 1];
                for (j, p) in prev.iter_mut().enumerate() {
                    *p *= match below.activation {
                        Activation::Sigmoid => {
                            let s = acts[i][j];
                            s * (1.0 - s)
                        }
                        Activation::Relu => {
                            if pre[i - 1][j] > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Activation::Softmax => unreachable!("softmax only on the output layer"),
                    };
                }
                std::mem::swap(&mut delta, &mut prev);
            }
        }

        let inv = 1.0 / n as f64;
        grads.scale(inv);
        Ok((loss * inv, grads))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, features: &[f64], labels: &[usize]) -> Result<f64> {
        let dim = self.input_size();
        if labels.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Contract("feature/label count mismatch".into()));
        }
        let mut a = Vec::new();
        let mut z = Vec::new();
        let mut total = 0.0;
        for (x, &label) in features.chunks_exact(dim).zip(labels) {
            a.clear();
            a.extend_from_slice(x);
            for l in &self.layers {
                l.affine(&a, &mut z);
                activate(l.activation, &z, &mut a);
            }
            total += log_sum_exp(&z) - z[label];
        }
        Ok(total / labels.len() as f64)
    }

    /// Fraction of samples whose argmax class equals the label.
    pub fn accuracy(&self, features: &[f64], labels: &[usize]) -> Result<f64> {
        let dim = self.input_size();
        let mut hits = 0usize;
        for (x, &label) in features.chunks_exact(dim).zip(labels) {
            if self.predict(x)? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len().max(1) as f64)
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ACTS: [Activation; 3] = [Activation::Sigmoid, Activation::Relu, Activation::Softmax];

    #[test]
    fn zero_net_is_uniform() {
        let m = Mlp::zeros(&[2, 5, 5, 4], &ACTS).unwrap();
        let p = m.forward(&[0.3, -2.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn output_is_normalized() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::new(&[3, 8, 8, 5], &ACTS, &mut r).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| r.random_range(-20.0..20.0)).collect();
            let p = m.forward(&x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn matches_straight_line_evaluation() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let m = Mlp::new(&[2, 3, 2], &[Activation::Sigmoid, Activation::Softmax], &mut r).unwrap();
        let x = [0.4, -1.1];
        let l0 = &m.layers()[0];
        let l1 = &m.layers()[1];
        let mut h = [0.0; 3];
        for o in 0..3 {
            let z = l0.weights[o * 2] * x[0] + l0.weights[o * 2 + 1] * x[1] + l0.biases[o];
            h[o] = 1.0 / (1.0 + (-z).exp());
        }
        let mut z = [0.0; 2];
        for o in 0..2 {
            z[o] = (0..3).map(|j| l1.weights[o * 3 + j] * h[j]).sum::<f64>() + l1.biases[o];
        }
        let e0 = z[0].exp();
        let e1 = z[1].exp();
        let p = m.forward(&x).unwrap();
        assert_abs_diff_eq!(p[0], e0 / (e0 + e1), epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], e1 / (e0 + e1), epsilon = 1e-14);
    }

    #[test]
    fn loss_closed_forms() {
        let m = Mlp::zeros(&[2, 3, 4], &[Activation::Relu, Activation::Softmax]).unwrap();
        let (loss, _) = m.loss_and_grad(&[1.0, 2.0, 0.0, 0.0], &[1, 3]).unwrap();
        assert_abs_diff_eq!(loss, 4f64.ln(), epsilon = 1e-14);

        // huge logit on the true class
        let mut m = Mlp::zeros(&[1, 2], &[Activation::Softmax]).unwrap();
        m.layers_mut()[0].biases = vec![800.0, 0.0];
        let (loss, _) = m.loss_and_grad(&[0.0], &[0]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn bad_batches() {
        let m = Mlp::zeros(&[2, 2], &[Activation::Softmax]).unwrap();
        assert!(matches!(m.loss_and_grad(&[], &[]), Err(Error::Empty(_))));
        assert!(matches!(m.loss_and_grad(&[0.0, 0.0], &[2]), Err(Error::LabelOutOfRange { .. })));
        assert!(m.loss_and_grad(&[0.0], &[0]).is_err());
        assert!(m.forward(&[0.0]).is_err());
    }

    #[test]
    fn invalid_layouts() {
        assert!(Mlp::zeros(&[2], &[]).is_err());
        assert!(Mlp::zeros(&[2, 3], &[Activation::Relu]).is_err());
        assert!(Mlp::zeros(&[2, 3, 2], &[Activation::Softmax, Activation::Softmax]).is_err());
        assert!(Mlp::zeros(&[2, 0, 2], &[Activation::Relu, Activation::Softmax]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let m = Mlp::new(&[4, 6, 5, 3], &ACTS, &mut r).unwrap();
        let x: Vec<f64> = (0..4 * 8).map(|_| r.random_range(-2.0..2.0)).collect();
        let y: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let (_, g) = m.loss_and_grad(&x, &y).unwrap();
        let g = g.flat();
        let theta = m.flat_params();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut mp = m.clone();
            let mut t = theta.clone();
            t[i] += h;
            mp.set_flat_params(&t).unwrap();
            let up = mp.loss(&x, &y).unwrap();
            t[i] -= 2.0 * h;
            mp.set_flat_params(&t).unwrap();
            let down = mp.loss(&x, &y).unwrap();
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3);
            assert!(rel < 1e-5, "param {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn counts() {
        let m = Mlp::zeros(&[2, 10, 10, 2], &ACTS).unwrap();
        assert_eq!(m.count_params(), 162);
        assert_eq!(m.count_rmps(), 140);
        assert_eq!(m.layer_sizes(), vec![2, 10, 10, 2]);
    }
}
