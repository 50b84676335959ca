//! Desk-scale objectives with exact full-batch gradients and seeded minibatch
//! gradients: quadratics, least squares, softmax regression and a small MLP.

mod data;
mod mlp;

pub use data::{gen_blobs, load_csv, CsvSchema, Dataset, SyntheticDataset};
pub use mlp::{Activation, Mlp};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::weights::Weights;
use mlp::{argmax, log_softmax};

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    /// `1/2 w'Hw - b'w`.
    Quadratic { h: DMatrix<f64>, b: DVector<f64> },
    /// `1/(2n) ||Aw - y||^2`.
    LeastSquares { a: DMatrix<f64>, y: DVector<f64> },
    /// Softmax cross-entropy with `l2/2 ||w||^2`; one row `[w_k, b_k]` per class.
    Logistic { data: Dataset, l2: f64 },
    Mlp(Mlp),
}

/// Which samples a gradient is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSelector {
    Full,
    /// Batch `step mod B` of the epoch `step / B` permutation, `B = ceil(n / batch_size)`.
    Minibatch { seed: u64, batch_size: usize, step: u64 },
}

/// Permutation of `0..n` for one epoch, keyed on `(seed, epoch)`.
pub fn epoch_permutation(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

/// Sample indices picked by `sel` from `n` samples.
pub fn batch_indices(sel: SampleSelector, n: usize) -> Vec<usize> {
    match sel {
        SampleSelector::Full => (0..n).collect(),
        SampleSelector::Minibatch { seed, batch_size, step } => {
            let bs = batch_size.clamp(1, n.max(1));
            let per_epoch = n.div_ceil(bs) as u64;
            let (epoch, j) = (step / per_epoch, (step % per_epoch) as usize);
            let perm = epoch_permutation(seed, epoch, n);
            perm[j * bs..((j + 1) * bs).min(n)].to_vec()
        }
    }
}

fn vector(w: &Weights) -> DVector<f64> {
    DVector::from_vec(w.to_flat())
}

impl Problem {
    pub fn quadratic(h: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if h.len() != d * d || d == 0 {
            return Err(Error::Shape(format!("H has {} entries for dimension {d}", h.len())));
        }
        let h = DMatrix::from_row_slice(d, d, &h);
        if (&h - h.transpose()).amax() > 1e-12 * (1.0 + h.amax()) {
            return Err(Error::InvalidProblem("H is not symmetric".into()));
        }
        let min_eig = h.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * (1.0 + h.amax()) {
            return Err(Error::InvalidProblem(format!("H is not positive semidefinite (eigenvalue {min_eig})")));
        }
        Ok(Self::Quadratic { h, b: DVector::from_vec(b) })
    }

    /// `1/2 w^2`.
    pub fn half_square() -> Self {
        Self::quadratic(vec![1.0], vec![0.0]).unwrap()
    }

    /// `H = M'M/d + floor I`, entries of `M` and `b` uniform in `[-1, 1]`.
    pub fn random_quadratic(dim: usize, seed: u64, floor: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let h = m.transpose() * &m / dim as f64 + DMatrix::identity(dim, dim) * floor;
        let h = (&h + h.transpose()) * 0.5;
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self::quadratic(h.transpose().as_slice().to_vec(), b)
    }

    pub fn least_squares(a: Vec<f64>, y: Vec<f64>, n_features: usize) -> Result<Self> {
        let n = y.len();
        if n == 0 || n_features == 0 || a.len() != n * n_features {
            return Err(Error::Shape(format!("A has {} entries for {n} x {n_features}", a.len())));
        }
        Ok(Self::LeastSquares { a: DMatrix::from_row_slice(n, n_features, &a), y: DVector::from_vec(y) })
    }

    pub fn logistic(data: Dataset, l2: f64) -> Result<Self> {
        if !(l2 >= 0.0) {
            return Err(Error::InvalidProblem(format!("l2 must be >= 0, got {l2}")));
        }
        Ok(Self::Logistic { data, l2 })
    }

    pub fn mlp(hidden: &[usize], activation: Activation, data: Dataset) -> Result<Self> {
        Ok(Self::Mlp(Mlp::new(hidden, activation, data)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadratic { .. } => "quadratic",
            Self::LeastSquares { .. } => "least_squares",
            Self::Logistic { .. } => "logistic",
            Self::Mlp(_) => "mlp",
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::Mlp(_))
    }

    pub fn n_samples(&self) -> Option<usize> {
        match self {
            Self::Quadratic { .. } => None,
            Self::LeastSquares { y, .. } => Some(y.len()),
            Self::Logistic { data, .. } => Some(data.n_samples()),
            Self::Mlp(m) => Some(m.data.n_samples()),
        }
    }

    pub fn dataset(&self) -> Option<&Dataset> {
        match self {
            Self::Logistic { data, .. } => Some(data),
            Self::Mlp(m) => Some(&m.data),
            _ => None,
        }
    }

    /// Zero weights with the problem's group layout.
    pub fn layout(&self) -> Weights {
        match self {
            Self::Quadratic { b, .. } => Weights::single(vec![0.0; b.len()]),
            Self::LeastSquares { a, .. } => Weights::single(vec![0.0; a.ncols()]),
            Self::Logistic { data, .. } => Weights::single(vec![0.0; data.n_classes * (data.n_features + 1)]),
            Self::Mlp(m) => m.layout(),
        }
    }

    /// Seeded starting point: uniform `[-1, 1]` for the regression problems,
    /// zeros for softmax regression, scaled uniform for the MLP.
    pub fn init_weights(&self, seed: u64) -> Weights {
        match self {
            Self::Mlp(m) => m.init(seed),
            Self::Logistic { .. } => self.layout(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.layout().map(|_| rng.gen_range(-1.0..1.0))
            }
        }
    }

    fn check(&self, w: &Weights) -> Result<()> {
        self.layout().check_same_layout(w).map_err(|e| Error::Shape(e.to_string()))
    }

    pub fn loss(&self, w: &Weights) -> Result<f64> {
        self.loss_on(w, SampleSelector::Full)
    }

    pub fn loss_on(&self, w: &Weights, sel: SampleSelector) -> Result<f64> {
        let v = self.eval(w, sel, false)?.0;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { context: "loss", value: v })
        }
    }

    /// Exact gradient for `Full`, unbiased sampled gradient for `Minibatch`.
    pub fn grad(&self, w: &Weights, sel: SampleSelector) -> Result<Weights> {
        Ok(self.eval(w, sel, true)?.1.unwrap())
    }

    pub fn loss_grad(&self, w: &Weights, sel: SampleSelector) -> Result<(f64, Weights)> {
        let (l, g) = self.eval(w, sel, true)?;
        Ok((l, g.unwrap()))
    }

    fn eval(&self, w: &Weights, sel: SampleSelector, want_grad: bool) -> Result<(f64, Option<Weights>)> {
        self.check(w)?;
        match self {
            Self::Quadratic { h, b } => {
                let x = vector(w);
                let hx = h * &x;
                let loss = 0.5 * x.dot(&hx) - b.dot(&x);
                let g = want_grad.then(|| w.from_flat_like((hx - b).as_slice())).transpose()?;
                Ok((loss, g))
            }
            Self::LeastSquares { a, y } => {
                let idx = batch_indices(sel, y.len());
                let x = vector(w);
                let mut loss = 0.0;
                let mut g = vec![0.0; a.ncols()];
                let inv = 1.0 / idx.len() as f64;
                for &i in &idx {
                    let row = a.row(i);
                    let r = row.dot(&x.transpose()) - y[i];
                    loss += 0.5 * inv * r * r;
                    if want_grad {
                        for (gj, aj) in g.iter_mut().zip(row.iter()) {
                            *gj += inv * r * aj;
                        }
                    }
                }
                Ok((loss, want_grad.then(|| w.from_flat_like(&g)).transpose()?))
            }
            Self::Logistic { data, l2 } => {
                let idx = batch_indices(sel, data.n_samples());
                let theta = &w.groups[0].values;
                let (d, k) = (data.n_features, data.n_classes);
                let inv = 1.0 / idx.len() as f64;
                let mut loss = 0.5 * l2 * w.norm_sq();
                let mut g: Vec<f64> = theta.iter().map(|v| l2 * v).collect();
                for &i in &idx {
                    let x = data.row(i);
                    let z: Vec<f64> = (0..k).map(|c| logistic_logit(theta, x, c, d)).collect();
                    let (lse, p) = log_softmax(&z);
                    let y = data.labels[i];
                    loss += inv * (lse - z[y]);
                    if want_grad {
                        for c in 0..k {
                            let e = inv * (p[c] - if c == y { 1.0 } else { 0.0 });
                            let row = &mut g[c * (d + 1)..(c + 1) * (d + 1)];
                            for j in 0..d {
                                row[j] += e * x[j];
                            }
                            row[d] += e;
                        }
                    }
                }
                Ok((loss, want_grad.then(|| w.from_flat_like(&g)).transpose()?))
            }
            Self::Mlp(m) => {
                let idx = batch_indices(sel, m.data.n_samples());
                Ok(m.loss_grad(w, &idx, want_grad))
            }
        }
    }

    /// Training accuracy under argmax with ties to the lowest class; `None`
    /// for the regression problems.
    pub fn accuracy(&self, w: &Weights) -> Result<Option<f64>> {
        self.check(w)?;
        let (data, predict): (&Dataset, Box<dyn Fn(&[f64]) -> usize + '_>) = match self {
            Self::Logistic { data, .. } => {
                let theta = &w.groups[0].values;
                let (d, k) = (data.n_features, data.n_classes);
                (data, Box::new(move |x| argmax(&(0..k).map(|c| logistic_logit(theta, x, c, d)).collect::<Vec<_>>())))
            }
            Self::Mlp(m) => (&m.data, Box::new(move |x| argmax(&m.logits(w, x)))),
            _ => return Ok(None),
        };
        let hits = (0..data.n_samples()).filter(|&i| predict(data.row(i)) == data.labels[i]).count();
        Ok(Some(hits as f64 / data.n_samples() as f64))
    }

    /// Minimizer when available in closed form.
    pub fn optimum(&self) -> Option<Weights> {
        let sol = match self {
            Self::Quadratic { h, b } => h.clone().cholesky()?.solve(b),
            Self::LeastSquares { a, y } => {
                let ata = a.transpose() * a;
                ata.cholesky()?.solve(&(a.transpose() * y))
            }
            _ => return None,
        };
        self.layout().from_flat_like(sol.as_slice()).ok()
    }
}

fn logistic_logit(theta: &[f64], x: &[f64], c: usize, d: usize) -> f64 {
    let row = &theta[c * (d + 1)..(c + 1) * (d + 1)];
    row[d] + row[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(p: &Problem, w: &Weights) -> f64 {
        let g = p.grad(w, SampleSelector::Full).unwrap().to_flat();
        let x = w.to_flat();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = p.loss(&w.from_flat_like(&xp).unwrap()).unwrap();
            let fm = p.loss(&w.from_flat_like(&xm).unwrap()).unwrap();
            worst = worst.max(((fp - fm) / (2.0 * h) - g[j]).abs() / scale);
        }
        worst
    }

    fn blobs(seed: u64, n: usize, d: usize, k: usize, sep: f64) -> Dataset {
        gen_blobs(&SyntheticDataset { seed, n_samples: n, n_features: d, n_classes: k, class_separation: sep })
            .unwrap()
    }

    #[test]
    fn half_square_values() {
        let p = Problem::half_square();
        let w = Weights::scalar(0.3);
        assert!((p.loss(&w).unwrap() - 0.045).abs() < 1e-15);
        assert!((p.grad(&w, SampleSelector::Full).unwrap().to_flat()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn logistic_zero_weights() {
        let p = Problem::logistic(blobs(3, 40, 2, 2, 1.0), 0.0).unwrap();
        let l = p.loss(&p.layout()).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        // every sample predicted class 0, half the labels are 0
        assert_eq!(p.accuracy(&p.layout()).unwrap(), Some(0.5));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..20u64 {
            let q = Problem::random_quadratic(4, trial, 0.1).unwrap();
            let ls = Problem::least_squares(
                (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                3,
            )
            .unwrap();
            let lg = Problem::logistic(blobs(trial, 12, 3, 3, 1.5), 0.05).unwrap();
            let act = if trial % 2 == 0 { Activation::Tanh } else { Activation::Relu };
            let mlp = Problem::mlp(&[5], act, blobs(trial, 10, 3, 3, 1.0)).unwrap();
            for p in [&q, &ls, &lg, &mlp] {
                let w = p.layout().map(|_| rng.gen_range(-1.0..1.0));
                let err = fd_check(p, &w);
                assert!(err < 1e-5, "{} trial {trial}: {err}", p.name());
            }
        }
    }

    #[test]
    fn deep_mlp_gradient() {
        let p = Problem::mlp(&[4, 3], Activation::Tanh, blobs(1, 8, 3, 2, 1.0)).unwrap();
        let w = p.init_weights(5).map(|v| v + 0.1);
        assert!(fd_check(&p, &w) < 1e-5);
    }

    #[test]
    fn epoch_of_minibatches_is_unbiased() {
        let p = Problem::logistic(blobs(2, 48, 3, 3, 1.0), 0.1).unwrap();
        let w = p.layout().map(|_| 0.2);
        let full = p.grad(&w, SampleSelector::Full).unwrap();
        for epoch in 0..3u64 {
            let mut acc = w.zeros_like();
            for j in 0..6 {
                let sel = SampleSelector::Minibatch { seed: 8, batch_size: 8, step: epoch * 6 + j };
                acc = acc.axpy(1.0 / 6.0, &p.grad(&w, sel).unwrap()).unwrap();
            }
            assert!(acc.max_abs_diff(&full).unwrap() < 1e-10);
        }
    }

    #[test]
    fn minibatches_partition_epoch() {
        let mut seen: Vec<usize> = (0..5)
            .flat_map(|s| batch_indices(SampleSelector::Minibatch { seed: 1, batch_size: 5, step: s }, 23))
            .collect();
        seen.sort();
        assert_eq!(seen, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn quadratic_optimum_is_stationary() {
        for seed in 0..5 {
            let p = Problem::random_quadratic(5, seed, 0.05).unwrap();
            let opt = p.optimum().unwrap();
            assert!(p.grad(&opt, SampleSelector::Full).unwrap().norm_inf() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_quadratic() {
        assert!(Problem::quadratic(vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Problem::quadratic(vec![-1.0], vec![0.0]).is_err());
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let p = Problem::logistic(blobs(4, 90, 3, 3, 12.0), 0.0).unwrap();
        let mut w = p.layout();
        for _ in 0..300 {
            let g = p.grad(&w, SampleSelector::Full).unwrap();
            w = w.axpy(-0.5, &g).unwrap();
        }
        assert_eq!(p.accuracy(&w).unwrap(), Some(1.0));
    }

    #[test]
    fn structureless_labels_near_chance() {
        // no class signal: any classifier hits about 1/K
        let mut accs = Vec::new();
        for seed in 0..10 {
            let p = Problem::logistic(blobs(seed, 600, 3, 3, 0.0), 0.0).unwrap();
            let w = p.layout().map(|_| 0.0).from_flat_like(&(0..12).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>()).unwrap();
            accs.push(p.accuracy(&w).unwrap().unwrap());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn shape_mismatch() {
        let p = Problem::half_square();
        assert!(p.loss(&Weights::single(vec![0.0, 1.0])).is_err());
    }
}
