use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::weights::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    /// Subgradient 0 at 0.
    Relu,
}

impl Activation {
    fn f(self, z: f64) -> f64 {
        match self {
            Self::Tanh => z.tanh(),
            Self::Relu => z.max(0.0),
        }
    }

    /// Derivative from the pre-activation `z` and output `a`.
    fn df(self, z: f64, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected network with softmax cross-entropy output. Groups are
/// `W1, b1, W2, b2, ...`; `W_l` is row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub data: Dataset,
}

impl Mlp {
    pub fn new(hidden: &[usize], activation: Activation, data: Dataset) -> Result<Self> {
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::InvalidProblem("mlp needs at least one nonempty hidden layer".into()));
        }
        let mut layer_sizes = vec![data.n_features];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(data.n_classes);
        Ok(Self { layer_sizes, activation, data })
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layout(&self) -> Weights {
        let mut w = Weights::new();
        for l in 0..self.n_layers() {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            w = w.with_group(&format!("W{}", l + 1), vec![0.0; i * o]);
            w = w.with_group(&format!("b{}", l + 1), vec![0.0; o]);
        }
        w
    }

    /// Uniform in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`; biases zero.
    pub fn init(&self, seed: u64) -> Weights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = self.layout();
        for l in 0..self.n_layers() {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let a = (6.0 / (i + o) as f64).sqrt();
            for v in &mut w.groups[2 * l].values {
                *v = rng.gen_range(-a..=a);
            }
        }
        w
    }

    /// Activations of every layer for one sample; the last entry holds logits.
    fn forward(&self, w: &Weights, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::with_capacity(self.n_layers());
        let mut acts = vec![x.to_vec()];
        for l in 0..self.n_layers() {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let wm = &w.groups[2 * l].values;
            let b = &w.groups[2 * l + 1].values;
            let prev = &acts[l];
            let z: Vec<f64> = (0..o)
                .map(|r| b[r] + wm[r * i..(r + 1) * i].iter().zip(prev).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            let a = if l + 1 == self.n_layers() {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.f(v)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    pub fn logits(&self, w: &Weights, x: &[f64]) -> Vec<f64> {
        self.forward(w, x).1.pop().unwrap()
    }

    /// Mean cross-entropy over `idx`, with its gradient when asked.
    pub fn loss_grad(&self, w: &Weights, idx: &[usize], want_grad: bool) -> (f64, Option<Weights>) {
        let mut grad = want_grad.then(|| w.zeros_like());
        let mut total = 0.0;
        let inv_n = 1.0 / idx.len() as f64;
        for &s in idx {
            let (zs, acts) = self.forward(w, self.data.row(s));
            let logits = acts.last().unwrap();
            let (lse, probs) = log_softmax(logits);
            let y = self.data.labels[s];
            total += lse - logits[y];
            let Some(g) = grad.as_mut() else { continue };
            let mut delta: Vec<f64> = probs;
            delta[y] -= 1.0;
            for l in (0..self.n_layers()).rev() {
                let i = self.layer_sizes[l];
                let prev = &acts[l];
                {
                    let gw = &mut g.groups[2 * l].values;
                    for (r, d) in delta.iter().enumerate() {
                        for (c, p) in prev.iter().enumerate() {
                            gw[r * i + c] += inv_n * d * p;
                        }
                    }
                }
                for (gb, d) in g.groups[2 * l + 1].values.iter_mut().zip(&delta) {
                    *gb += inv_n * d;
                }
                if l == 0 {
                    break;
                }
                let wm = &w.groups[2 * l].values;
                let back: Vec<f64> = (0..i)
                    .map(|c| delta.iter().enumerate().map(|(r, d)| d * wm[r * i + c]).sum::<f64>())
                    .collect();
                delta = back
                    .iter()
                    .zip(&zs[l - 1])
                    .zip(&acts[l])
                    .map(|((b, &z), &a)| b * self.activation.df(z, a))
                    .collect();
            }
        }
        (total * inv_n, grad)
    }
}

/// `(log-sum-exp, softmax)`.
pub(crate) fn log_softmax(z: &[f64]) -> (f64, Vec<f64>) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    (m + s.ln(), e.iter().map(|v| v / s).collect())
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = k;
        }
    }
    best
}
