use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, Mlp};
use crate::modem::Modulation;
use crate::{Error, Result};

/// Row-major features with one class label per row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            ..Default::default()
        }
    }

    pub fn push(&mut self, x: &[f64], label: usize) {
        debug_assert_eq!(x.len(), self.dim);
        self.features.extend_from_slice(x);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

/// `⌈12.5·log₂|S|⌉` epochs for a stream with alphabet `modulation`.
pub fn epochs_for(modulation: Modulation) -> usize {
    (12.5 * modulation.bits_per_symbol() as f64).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Requested mini-batch size; anything above the set size means full batch.
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainSpec {
    /// Default schedule for a network detecting a stream modulated with
    /// `target`: `⌈12.5·log₂|S|⌉` epochs and batch `max(T, 25·|S_1|)`, where
    /// `S_1` is the highest-order private alphabet.
    pub fn for_stream(target: Modulation, training_symbols: usize, top_private: Modulation, seed: u64) -> Self {
        TrainSpec {
            adam: AdamConfig::default(),
            epochs: epochs_for(target),
            batch_size: training_symbols.max(25 * top_private.order()),
            seed,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.adam.learning_rate = lr;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Full-set loss after each epoch.
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
}

impl Mlp {
    /// Mini-batch Adam over `data`, reshuffled every epoch from `spec.seed`.
    pub fn train(&mut self, data: &Dataset, spec: &TrainSpec) -> Result<TrainLog> {
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if data.dim != self.input_size() {
            return Err(Error::Contract(format!(
                "training features have width {}, network expects {}",
                data.dim,
                self.input_size()
            )));
        }
        let classes = self.output_size();
        if let Some(&bad) = data.labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }
        if !(spec.adam.learning_rate > 0.0) || spec.epochs == 0 || spec.batch_size == 0 {
            return Err(Error::Contract("learning rate, epochs and batch size must be positive".into()));
        }

        let n = data.len();
        let batch = spec.batch_size.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = AdamState::new(self);
        let mut log = TrainLog::default();
        let mut xb = Vec::with_capacity(batch * data.dim);
        let mut yb = Vec::with_capacity(batch);

        for _ in 0..spec.epochs {
            if batch < n {
                order.shuffle(&mut rng);
            }
            for chunk in order.chunks(batch) {
                xb.clear();
                yb.clear();
                for &i in chunk {
                    xb.extend_from_slice(data.row(i));
                    yb.push(data.labels[i]);
                }
                let (_, g) = self.loss_and_grad(&xb, &yb)?;
                state.step(self, &g, &spec.adam)?;
                log.steps += 1;
            }
            log.epoch_loss.push(self.loss(&data.features, &data.labels)?);
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::Rng;

    #[test]
    fn epoch_schedule() {
        assert_eq!(epochs_for(Modulation::Qpsk), 25);
        assert_eq!(epochs_for(Modulation::Qam16), 50);
        assert_eq!(epochs_for(Modulation::Qam64), 75);
        assert_eq!(epochs_for(Modulation::Qam256), 100);
        let s = TrainSpec::for_stream(Modulation::Qpsk, 320, Modulation::Qpsk, 0);
        assert_eq!(s.batch_size, 320);
        let s = TrainSpec::for_stream(Modulation::Qpsk, 80, Modulation::Qam16, 0);
        assert_eq!(s.batch_size, 400);
    }

    fn separable(seed: u64) -> Dataset {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Dataset::new(2);
        for i in 0..60 {
            let label = i % 2;
            let cx = if label == 0 { -2.0 } else { 2.0 };
            d.push(&[cx + r.random_range(-0.5..0.5), r.random_range(-1.0..1.0)], label);
        }
        d
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let d = separable(1);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let mut m = Mlp::new(
            &[2, 10, 10, 2],
            &[Activation::Sigmoid, Activation::Relu, Activation::Softmax],
            &mut r,
        )
        .unwrap();
        let spec = TrainSpec::for_stream(Modulation::Qpsk, d.len(), Modulation::Qpsk, 3);
        m.train(&d, &spec).unwrap();
        assert_eq!(m.accuracy(&d.features, &d.labels).unwrap(), 1.0);
    }

    #[test]
    fn convex_problem_loss_decreases() {
        // softmax regression without hidden layers is convex
        let d = separable(4);
        let mut m = Mlp::zeros(&[2, 2], &[Activation::Softmax]).unwrap();
        let spec = TrainSpec {
            adam: AdamConfig { learning_rate: 0.01, ..Default::default() },
            epochs: 40,
            batch_size: d.len(),
            seed: 0,
        };
        let log = m.train(&d, &spec).unwrap();
        assert!(log.epoch_loss.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(log.steps, 40);
    }

    #[test]
    fn equal_seeds_give_identical_parameters() {
        let d = separable(5);
        let acts = [Activation::Sigmoid, Activation::Relu, Activation::Softmax];
        let spec = TrainSpec { batch_size: 8, ..TrainSpec::for_stream(Modulation::Qpsk, 60, Modulation::Qpsk, 9) };
        let run = || {
            let mut m = Mlp::new(&[2, 6, 6, 2], &acts, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            m.train(&d, &spec).unwrap();
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_sets() {
        let mut m = Mlp::zeros(&[2, 2], &[Activation::Softmax]).unwrap();
        let spec = TrainSpec::for_stream(Modulation::Qpsk, 1, Modulation::Qpsk, 0);
        assert!(m.train(&Dataset::new(2), &spec).is_err());
        let mut d = Dataset::new(2);
        d.push(&[0.0, 0.0], 5);
        assert!(matches!(m.train(&d, &spec), Err(Error::LabelOutOfRange { .. })));
    }
}
