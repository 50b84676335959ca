use crate::error::{Error, Result};
use crate::quantizers::QuantizationGrid;

/// Convex regularizer with closed-form conjugate, proximal maps and Moreau
/// envelope, all coordinatewise.
#[derive(Debug, Clone, PartialEq)]
pub enum DualRegularizer {
    /// `sigma/2 w^2`.
    SquaredNorm { sigma: f64 },
    /// `sigma/2 w^2` restricted to `[lo, hi]`.
    BoxedSquaredNorm { lo: f64, hi: f64, sigma: f64 },
    /// Convex envelope of `beta/2 dist(w, Q)^2`, which is `beta/2 dist(w, [q_1, q_b])^2`.
    /// Its conjugate is not smooth, so it is only usable through the Moreau envelope.
    ScaledSqDist { grid: QuantizationGrid, beta: f64 },
}

impl DualRegularizer {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::SquaredNorm { sigma } => *sigma > 0.0,
            Self::BoxedSquaredNorm { lo, hi, sigma } => *sigma > 0.0 && lo < hi && lo.is_finite() && hi.is_finite(),
            Self::ScaledSqDist { beta, .. } => *beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("invalid regularizer descriptor {self:?}")))
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            Self::SquaredNorm { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::BoxedSquaredNorm { lo, hi, .. } => (*lo, *hi),
            Self::ScaledSqDist { grid, .. } => (grid.lo(), grid.hi()),
        }
    }

    /// `r**(w)`.
    pub fn value(&self, w: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => 0.5 * sigma * w * w,
            Self::BoxedSquaredNorm { lo, hi, sigma } => {
                if (*lo..=*hi).contains(&w) {
                    0.5 * sigma * w * w
                } else {
                    f64::INFINITY
                }
            }
            Self::ScaledSqDist { beta, .. } => {
                let (lo, hi) = self.bounds();
                let d = (lo - w).max(w - hi).max(0.0);
                0.5 * beta * d * d
            }
        }
    }

    /// `r*(y)`.
    pub fn conj_value(&self, y: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => y * y / (2.0 * sigma),
            Self::BoxedSquaredNorm { lo, hi, sigma } => {
                let w = (y / sigma).clamp(*lo, *hi);
                w * y - 0.5 * sigma * w * w
            }
            Self::ScaledSqDist { beta, .. } => {
                let (lo, hi) = self.bounds();
                (lo * y).max(hi * y) + y * y / (2.0 * beta)
            }
        }
    }

    /// `grad r*(y)` when `r*` is smooth.
    pub fn conj_grad(&self, y: f64) -> Option<f64> {
        match self {
            Self::SquaredNorm { sigma } => Some(y / sigma),
            Self::BoxedSquaredNorm { lo, hi, sigma } => Some((y / sigma).clamp(*lo, *hi)),
            Self::ScaledSqDist { .. } => None,
        }
    }

    /// Lipschitz constant of `grad r*`, if any.
    pub fn conj_smoothness(&self) -> Option<f64> {
        match self {
            Self::SquaredNorm { sigma } | Self::BoxedSquaredNorm { sigma, .. } => Some(1.0 / sigma),
            Self::ScaledSqDist { .. } => None,
        }
    }

    /// `argmin_w 1/(2 gamma) (w - x)^2 + r**(w)`.
    pub fn prox(&self, x: f64, gamma: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => x / (1.0 + gamma * sigma),
            Self::BoxedSquaredNorm { lo, hi, sigma } => (x / (1.0 + gamma * sigma)).clamp(*lo, *hi),
            Self::ScaledSqDist { beta, .. } => {
                let (lo, hi) = self.bounds();
                let c = x.clamp(lo, hi);
                if c == x {
                    x
                } else {
                    (x + gamma * beta * c) / (1.0 + gamma * beta)
                }
            }
        }
    }

    /// `argmin_z 1/(2 mu) (z - y)^2 + r*(z)`.
    pub fn conj_prox(&self, y: f64, mu: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => y * sigma / (sigma + mu),
            Self::BoxedSquaredNorm { lo, hi, sigma } => {
                if y > (sigma + mu) * hi {
                    y - mu * hi
                } else if y < (sigma + mu) * lo {
                    y - mu * lo
                } else {
                    y * sigma / (sigma + mu)
                }
            }
            Self::ScaledSqDist { beta, .. } => {
                let (lo, hi) = self.bounds();
                if y > mu * hi {
                    beta * (y - mu * hi) / (beta + mu)
                } else if y < mu * lo {
                    beta * (y - mu * lo) / (beta + mu)
                } else {
                    0.0
                }
            }
        }
    }

    /// Moreau envelope of `r*` with parameter `mu`, by its exact inner minimizer.
    pub fn moreau_value(&self, y: f64, mu: f64) -> f64 {
        let z = self.conj_prox(y, mu);
        (z - y) * (z - y) / (2.0 * mu) + self.conj_value(z)
    }

    /// `grad M(y) = P^{1/mu}_{r**}(y / mu)`.
    pub fn moreau_gradient(&self, y: f64, mu: f64) -> f64 {
        self.prox(y / mu, 1.0 / mu)
    }

    /// `grad M(y) = (y - P^mu_{r*}(y)) / mu`, the envelope-theorem route.
    pub fn moreau_gradient_envelope(&self, y: f64, mu: f64) -> f64 {
        (y - self.conj_prox(y, mu)) / mu
    }

    /// A point inside the domain of `r**`.
    pub fn interior_point(&self) -> f64 {
        let (lo, hi) = self.bounds();
        if lo.is_finite() {
            0.5 * (lo + hi)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::golden_max;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all() -> Vec<DualRegularizer> {
        vec![
            DualRegularizer::SquaredNorm { sigma: 1.0 },
            DualRegularizer::SquaredNorm { sigma: 0.3 },
            DualRegularizer::BoxedSquaredNorm { lo: -1.0, hi: 1.0, sigma: 0.5 },
            DualRegularizer::BoxedSquaredNorm { lo: -0.2, hi: 2.0, sigma: 2.0 },
            DualRegularizer::ScaledSqDist { grid: QuantizationGrid::ternary(), beta: 1.0 },
            DualRegularizer::ScaledSqDist { grid: QuantizationGrid::new(&[0.0, 1.0]).unwrap(), beta: 4.0 },
        ]
    }

    #[test]
    fn half_square_envelope() {
        let r = DualRegularizer::SquaredNorm { sigma: 1.0 };
        assert!((r.moreau_value(1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((r.moreau_gradient(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conj_prox_is_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in all() {
            for _ in 0..50 {
                let y: f64 = rng.gen_range(-4.0..4.0);
                let mu: f64 = rng.gen_range(0.05..3.0);
                let z = r.conj_prox(y, mu);
                let obj = |z: f64| (z - y) * (z - y) / (2.0 * mu) + r.conj_value(z);
                let best = golden_max(|z| -obj(z), -20.0, 20.0, 300);
                assert!(obj(z) <= obj(best) + 1e-12, "{r:?} y={y} mu={mu}");
            }
        }
    }

    #[test]
    fn prox_is_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in all() {
            for _ in 0..50 {
                let x: f64 = rng.gen_range(-4.0..4.0);
                let g: f64 = rng.gen_range(0.05..3.0);
                let w = r.prox(x, g);
                let obj = |w: f64| (w - x) * (w - x) / (2.0 * g) + r.value(w);
                let (lo, hi) = r.bounds();
                let best = golden_max(|w| -obj(w), lo.max(-20.0), hi.min(20.0), 300);
                assert!(obj(w) <= obj(best) + 1e-12, "{r:?} x={x} g={g}");
            }
        }
    }

    #[test]
    fn envelope_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in all() {
            for _ in 0..100 {
                let y: f64 = rng.gen_range(-4.0..4.0);
                let mu: f64 = rng.gen_range(0.05..3.0);
                let a = r.moreau_gradient(y, mu);
                let b = r.moreau_gradient_envelope(y, mu);
                assert!((a - b).abs() < 1e-10, "{r:?}");
            }
        }
    }

    #[test]
    fn smooth_limit() {
        for r in all().into_iter().filter(|r| r.conj_grad(0.0).is_some()) {
            for y in [-2.0, -0.3, 0.1, 0.7, 3.0] {
                let g = r.conj_grad(y).unwrap();
                assert!((r.moreau_gradient(y, 1e-9) - g).abs() < 1e-6);
            }
        }
    }
}
