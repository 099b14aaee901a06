use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::logistic::{sigmoid, softplus};
use super::{rng, GroupLayout, LabeledData, Problem};
use crate::error::{NovakError, Result};
use crate::param::RoleTag;

/// Default number of two-spirals points (both classes together).
pub const DEFAULT_SAMPLES: usize = 400;
/// Default number of spiral turns.
pub const DEFAULT_TURNS: f64 = 1.0;
/// Standard deviation of the Gaussian jitter added to the spiral points.
pub const DEFAULT_JITTER: f64 = 0.02;
/// Initial weights are `N(0, (gain/√fan_in)²)`.
pub const DEFAULT_INIT_GAIN: f64 = 0.8;
/// Initial biases are `N(0, std²)`.
pub const DEFAULT_BIAS_STD: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
struct Layer {
    w: usize,
    b: usize,
    fan_out: usize,
    fan_in: usize,
}

/// A plain tanh MLP (no skip connections, no normalization) classifying
/// the two-spirals dataset with a logistic output.
///
/// `depth` counts linear layers: `2 → width`, `depth − 2` hidden
/// `width → width` layers, and `width → 1`. Parameters are laid out
/// `w0, b0, w1, b1, …`, each weight matrix row-major with shape
/// `[fan_out, fan_in]`. Weights start at `N(0, 0.64/fan_in)` and biases at
/// `N(0, 0.25)`, which puts the network in the ordered regime where
/// gradients shrink toward the input.
#[derive(Debug, Clone)]
pub struct DeepPlainMlp {
    name: String,
    width: usize,
    layers: Vec<Layer>,
    dimension: usize,
    data: LabeledData,
    init_gain: f64,
    bias_std: f64,
    seed: u64,
}

impl DeepPlainMlp {
    pub fn new(depth: usize, width: usize, seed: u64) -> Result<Self> {
        Self::with_data(depth, width, seed, DEFAULT_SAMPLES, DEFAULT_TURNS)
    }

    pub fn with_data(depth: usize, width: usize, seed: u64, samples: usize, turns: f64) -> Result<Self> {
        if depth < 8 {
            return Err(NovakError::config(format!("mlp depth must be >= 8, got {depth}")));
        }
        if width == 0 || samples < 10 || !(turns > 0.0) {
            return Err(NovakError::config(format!(
                "mlp needs width >= 1, samples >= 10 and positive turns, got {width}, {samples}, {turns}"
            )));
        }
        let mut layers = Vec::with_capacity(depth);
        let mut offset = 0;
        for l in 0..depth {
            let fan_in = if l == 0 { 2 } else { width };
            let fan_out = if l == depth - 1 { 1 } else { width };
            layers.push(Layer { w: offset, b: offset + fan_in * fan_out, fan_out, fan_in });
            offset += fan_in * fan_out + fan_out;
        }
        Ok(Self {
            name: format!("mlp_d{depth}_w{width}"),
            width,
            layers,
            dimension: offset,
            data: two_spirals(samples, turns, DEFAULT_JITTER, seed),
            init_gain: DEFAULT_INIT_GAIN,
            bias_std: DEFAULT_BIAS_STD,
            seed,
        })
    }

    /// Scales the initial weight standard deviation `gain/√fan_in`.
    pub fn with_init_gain(mut self, gain: f64) -> Self {
        self.init_gain = gain;
        self
    }

    /// Standard deviation of the initial biases.
    pub fn with_bias_std(mut self, std: f64) -> Self {
        self.bias_std = std;
        self
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &LabeledData {
        &self.data
    }

    /// Output logit for one input; fills `acts` with the input and every
    /// hidden activation.
    fn forward(&self, theta: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        acts.resize(self.layers.len(), Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(l + 1);
            let input = &head[l];
            let pre = (0..layer.fan_out).map(|o| {
                let row = &theta[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                theta[layer.b + o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>()
            });
            if l == last {
                return pre.sum();
            }
            let out = &mut tail[0];
            out.clear();
            out.extend(pre.map(f64::tanh));
        }
        unreachable!("network has an output layer")
    }

    fn backward(&self, theta: &[f64], acts: &[Vec<f64>], dz: f64, grad: &mut [f64], delta: &mut Vec<f64>) {
        delta.clear();
        delta.push(dz);
        let mut next = Vec::with_capacity(self.width);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                grad[layer.b + o] += d;
                let row = layer.w + o * layer.fan_in;
                for (g, a) in grad[row..row + layer.fan_in].iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            next.clear();
            next.resize(layer.fan_in, 0.0);
            for (o, &d) in delta.iter().enumerate() {
                let row = &theta[layer.w + o * layer.fan_in..layer.w + (o + 1) * layer.fan_in];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            // through tanh: 1 − a²
            for (n, a) in next.iter_mut().zip(input) {
                *n *= 1.0 - a * a;
            }
            std::mem::swap(delta, &mut next);
        }
    }

    fn gradient_over(&self, theta: &[f64], samples: impl Iterator<Item = usize>, weight: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.dimension];
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        for i in samples {
            let (x, y) = self.data.train(i);
            let z = self.forward(theta, x, &mut acts);
            let dz = (sigmoid(z) - f64::from(y)) * weight;
            self.backward(theta, &acts, dz, &mut grad, &mut delta);
        }
        grad
    }

    /// Weight-matrix gradient norms per layer, input layer first.
    pub fn layer_gradient_norms(&self, theta: &[f64]) -> Vec<f64> {
        let g = self.gradient(theta);
        self.layers.iter().map(|l| g[l.w..l.b].iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
    }
}

impl Problem for DeepPlainMlp {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        let n = self.data.train_len();
        let mut acts = Vec::new();
        let terms = (0..n).map(|i| {
            let (x, y) = self.data.train(i);
            let z = self.forward(theta, x, &mut acts);
            // binary cross-entropy with logits
            softplus(z) - f64::from(y) * z
        });
        compensated_sum(terms) / n as f64
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.data.train_len();
        self.gradient_over(theta, 0..n, 1.0 / n as f64)
    }

    fn stochastic_gradient(&self, theta: &[f64], seed: u64, batch: usize) -> Option<Vec<f64>> {
        let mut r = rng(seed, 1);
        let n = self.data.train_len();
        let idx: Vec<usize> = (0..batch).map(|_| r.random_range(0..n)).collect();
        Some(self.gradient_over(theta, idx.into_iter(), 1.0 / batch as f64))
    }

    fn check_batch(&self, batch: usize) -> Result<()> {
        if batch == 0 || 2 * batch > self.data.train_len() + self.data.test_len() {
            return Err(NovakError::config(format!("batch size {batch} needs at least twice as many samples")));
        }
        Ok(())
    }

    fn accuracy(&self, theta: &[f64]) -> Option<f64> {
        let n = self.data.test_len();
        let mut acts = Vec::new();
        let correct = (0..n)
            .filter(|&i| {
                let (x, y) = self.data.test(i);
                u8::from(self.forward(theta, x, &mut acts) > 0.0) == y
            })
            .count();
        Some(correct as f64 / n as f64)
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(self.seed ^ seed, 2);
        let mut theta = vec![0.0; self.dimension];
        for layer in &self.layers {
            let std = self.init_gain / (layer.fan_in as f64).sqrt();
            for w in &mut theta[layer.w..layer.b] {
                *w = std * r.sample::<f64, _>(StandardNormal);
            }
            for b in &mut theta[layer.b..layer.b + layer.fan_out] {
                *b = self.bias_std * r.sample::<f64, _>(StandardNormal);
            }
        }
        theta
    }

    fn layout(&self) -> Vec<GroupLayout> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| {
                [
                    GroupLayout {
                        name: format!("w{l}"),
                        shape: vec![layer.fan_out, layer.fan_in],
                        role: RoleTag::WeightMatrix,
                    },
                    GroupLayout { name: format!("b{l}"), shape: vec![layer.fan_out], role: RoleTag::Bias },
                ]
            })
            .collect()
    }
}

/// Neumaier summation; keeps the loss accurate enough for central
/// differences on small gradient components.
pub(crate) fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

/// Two interleaved spirals, `samples / 2` points each, radius growing
/// from 0.1 to 1 over `turns` revolutions.
fn two_spirals(samples: usize, turns: f64, jitter: f64, seed: u64) -> LabeledData {
    let mut r = rng(seed, 0);
    let per_class = samples / 2;
    let mut rows = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for class in [0u8, 1] {
        for i in 0..per_class {
            let t = i as f64 / per_class as f64;
            let radius = 0.1 + 0.9 * t;
            let angle = 2.0 * PI * turns * t + PI * f64::from(class);
            let mut p = [radius * angle.cos(), radius * angle.sin()];
            for c in &mut p {
                *c += jitter * r.sample::<f64, _>(StandardNormal);
            }
            rows.push(p.to_vec());
            labels.push(class);
        }
    }
    LabeledData::split(2, rows, labels, seed)
}
