//! Fully connected logistic network trained by mini-batch SGD on squared error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Label};
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights are stored per layer as `out x in` row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Parameter-shaped gradient (or update) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(p: &MlpParams) -> Self {
        Gradients {
            weights: p.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: p.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| w.fill(0.0));
        self.biases.iter_mut().for_each(|b| b.fill(0.0));
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::Argument(format!(
            "layer sizes must list at least input and output, all non-zero: {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|p| vec![0.0; p[0] * p[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Uniform initialization in `+-1/sqrt(fan_in)`.
    pub fn random(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(layer_sizes, &mut rng)
    }

    fn random_with(layer_sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(layer_sizes)?;
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            let bound = 1.0 / (pair[0] as f64).sqrt();
            for w in &mut p.weights[l] {
                *w = rng.random_range(-bound..bound);
            }
            for b in &mut p.biases[l] {
                *b = rng.random_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Shape {
                expected: layers,
                got: weights.len().min(biases.len()),
            });
        }
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] {
                return Err(Error::Shape {
                    expected: pair[0] * pair[1],
                    got: weights[l].len(),
                });
            }
            if biases[l].len() != pair[1] {
                return Err(Error::Shape {
                    expected: pair[1],
                    got: biases[l].len(),
                });
            }
        }
        if weights.iter().chain(&biases).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("network parameters must be finite".into()));
        }
        Ok(MlpParams {
            layer_sizes,
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::Shape {
                expected: self.input_size(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Output activations, each in (0, 1).
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(input)?.pop().unwrap())
    }

    /// Activations of every layer, input included.
    pub fn activations(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(input.to_vec());
        for l in 0..self.weights.len() {
            let next = self.layer(l, acts.last().unwrap());
            acts.push(next);
        }
        Ok(acts)
    }

    fn layer(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let n_in = self.layer_sizes[l];
        self.weights[l]
            .chunks_exact(n_in)
            .zip(&self.biases[l])
            .map(|(row, b)| sigmoid(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b))
            .collect()
    }

    /// Squared-error loss `0.5 * sum (o - t)^2` for one example.
    pub fn loss(&self, input: &[f64], target: &[f64]) -> Result<f64> {
        let out = self.forward(input)?;
        if target.len() != out.len() {
            return Err(Error::Shape {
                expected: out.len(),
                got: target.len(),
            });
        }
        Ok(0.5 * out.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>())
    }

    /// Loss and its exact gradient for one example.
    pub fn backprop(&self, input: &[f64], target: &[f64]) -> Result<(f64, Gradients)> {
        let mut g = Gradients::zeros_like(self);
        let loss = self.accumulate_gradient(input, target, &mut g)?;
        Ok((loss, g))
    }

    fn accumulate_gradient(&self, input: &[f64], target: &[f64], g: &mut Gradients) -> Result<f64> {
        let acts = self.activations(input)?;
        let out = acts.last().unwrap();
        if target.len() != out.len() {
            return Err(Error::Shape {
                expected: out.len(),
                got: target.len(),
            });
        }
        let loss = 0.5 * out.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        // delta = dL/dz for the current layer
        let mut delta: Vec<f64> = out
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * o * (1.0 - o))
            .collect();
        for l in (0..self.weights.len()).rev() {
            let n_in = self.layer_sizes[l];
            let x = &acts[l];
            for (j, d) in delta.iter().enumerate() {
                g.biases[l][j] += d;
                let row = &mut g.weights[l][j * n_in..(j + 1) * n_in];
                for (gw, xv) in row.iter_mut().zip(x) {
                    *gw += d * xv;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n_in];
                for (j, d) in delta.iter().enumerate() {
                    let row = &self.weights[l][j * n_in..(j + 1) * n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev
                    .iter()
                    .zip(x)
                    .map(|(p, a)| p * a * (1.0 - a))
                    .collect();
            }
        }
        Ok(loss)
    }

    fn apply(&mut self, g: &Gradients, step: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&g.weights) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= step * b;
            }
        }
        for (w, gw) in self.biases.iter_mut().zip(&g.biases) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= step * b;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_size: 48,
            learning_rate: 0.5,
            epochs: 40,
            batch_size: 8,
            seed: 1,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_examples: usize,
    pub validation_examples: usize,
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn last(&self) -> &EpochStats {
        self.epochs.last().expect("training runs at least one epoch")
    }
}

/// Training target: one-hot for a class, all zeros for a negative.
pub fn target_for(label: Label, outputs: usize) -> Vec<f64> {
    let mut t = vec![0.0; outputs];
    if let Label::Class(k) = label {
        if (k as usize) < outputs {
            t[k as usize] = 1.0;
        }
    }
    t
}

/// Class decision used for accuracy: argmax when the winning output reaches
/// 0.5, otherwise a negative.
pub fn decide(outputs: &[f64]) -> Label {
    let (best, &max) = outputs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("network has outputs");
    if max >= 0.5 {
        Label::Class(best as u8)
    } else {
        Label::Negative
    }
}

/// Mean loss and accuracy of `params` over the listed examples.
pub fn evaluate_examples(params: &MlpParams, data: &Dataset, indices: &[usize]) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Ok((0.0, 0.0));
    }
    let outputs = params.output_size();
    let (mut loss, mut correct) = (0.0, 0usize);
    for &i in indices {
        let ex = &data.examples[i];
        let out = params.forward(&ex.features)?;
        let target = target_for(ex.label, outputs);
        loss += 0.5 * out.iter().zip(&target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        if decide(&out) == ex.label {
            correct += 1;
        }
    }
    Ok((loss / indices.len() as f64, correct as f64 / indices.len() as f64))
}

/// Train an `input-hidden-outputs` network. Fully deterministic given the
/// dataset order and `cfg.seed`.
pub fn train(data: &Dataset, outputs: usize, cfg: &TrainConfig) -> Result<(MlpParams, TrainReport)> {
    if data.examples.is_empty() {
        return Err(Error::Argument("training dataset is empty".into()));
    }
    if data.distinct_labels() < 2 {
        return Err(Error::Argument("training needs at least two distinct labels".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.hidden_size == 0 {
        return Err(Error::Argument("epochs, batch size and hidden size must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::Argument("validation fraction must lie in [0, 1)".into()));
    }
    let input = data.feature_len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MlpParams::random_with(&[input, cfg.hidden_size, outputs], &mut rng)?;

    let mut order: Vec<usize> = (0..data.examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (data.examples.len() as f64 * cfg.validation_fraction).round() as usize;
    let n_val = n_val.min(data.examples.len() - 1);
    let validation: Vec<usize> = order[..n_val].to_vec();
    let mut training: Vec<usize> = order[n_val..].to_vec();
    let targets: Vec<Vec<f64>> = data
        .examples
        .iter()
        .map(|e| target_for(e.label, outputs))
        .collect();

    let mut grad = Gradients::zeros_like(&params);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        training.shuffle(&mut rng);
        for batch in training.chunks(cfg.batch_size) {
            grad.clear();
            for &i in batch {
                params.accumulate_gradient(&data.examples[i].features, &targets[i], &mut grad)?;
            }
            params.apply(&grad, cfg.learning_rate / batch.len() as f64);
        }
        let (train_loss, train_accuracy) = evaluate_examples(&params, data, &training)?;
        let (validation_loss, validation_accuracy) = if validation.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate_examples(&params, data, &validation)?;
            (Some(l), Some(a))
        };
        epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            validation_loss,
            validation_accuracy,
        });
    }
    Ok((
        params,
        TrainReport {
            train_examples: training.len(),
            validation_examples: validation.len(),
            epochs,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_half() {
        let p = MlpParams::zeros(&[256, 48, 10]).unwrap();
        let out = p.forward(&vec![0.3; 256]).unwrap();
        assert!(out.iter().all(|&o| o == 0.5));
    }

    #[test]
    fn one_by_one_closed_form() {
        let (w1, b1, w2, b2, x) = (0.7, -0.2, -1.3, 0.4, 0.9);
        let p = MlpParams::from_parts(vec![1, 1, 1], vec![vec![w1], vec![w2]], vec![vec![b1], vec![b2]]).unwrap();
        let expect = sigmoid(sigmoid(w1 * x + b1) * w2 + b2);
        assert_eq!(p.forward(&[x]).unwrap()[0], expect);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = MlpParams::zeros(&[4, 3, 2]).unwrap();
        assert!(matches!(p.forward(&[1.0; 3]), Err(Error::Shape { expected: 4, got: 3 })));
    }

    #[test]
    fn from_parts_rejects_bad_shapes_and_nan() {
        assert!(MlpParams::from_parts(vec![2, 1], vec![vec![0.0; 3]], vec![vec![0.0]]).is_err());
        assert!(MlpParams::from_parts(vec![2, 1], vec![vec![0.0, f64::NAN]], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn empty_or_single_label_dataset_is_rejected() {
        let cfg = TrainConfig::default();
        assert!(matches!(train(&Dataset::default(), 10, &cfg), Err(Error::Argument(_))));
        let mut d = Dataset::default();
        d.push(vec![0.0; 4], Label::Class(1)).unwrap();
        d.push(vec![1.0; 4], Label::Class(1)).unwrap();
        assert!(matches!(train(&d, 10, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn decide_thresholds_at_half() {
        assert_eq!(decide(&[0.1, 0.7, 0.2]), Label::Class(1));
        assert_eq!(decide(&[0.1, 0.4, 0.2]), Label::Negative);
    }
}
