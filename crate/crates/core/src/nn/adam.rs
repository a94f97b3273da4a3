use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        let n = net.count_params();
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// One bias-corrected Adam update of `net` in place.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
        if grads.weights.len() != net.layers().len()
            || self.m.len() != net.count_params()
        {
            return Err(Error::Contract("optimizer state does not match the network".into()));
        }
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let c2 = 1.0 - cfg.beta2.powi(self.t as i32);
        let mut off = 0;
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let gw = &grads.weights[i];
            let gb = &grads.biases[i];
            if gw.len() != layer.weights.len() || gb.len() != layer.biases.len() {
                return Err(Error::Contract(format!("gradient shape mismatch in layer {i}")));
            }
            for (p, &g) in layer
                .weights
                .iter_mut()
                .zip(gw)
                .chain(layer.biases.iter_mut().zip(gb))
            {
                let m = &mut self.m[off];
                let v = &mut self.v[off];
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
                off += 1;
            }
        }
        Ok(())
    }
}
