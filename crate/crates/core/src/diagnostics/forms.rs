use crate::error::{finite, Result};
use crate::numeric::CompensatedSum;
use crate::quantizers::{PiecewiseLinearQuantizer, QuantizationGrid, Quantizer, QuantizerSpec};
use crate::weights::Weights;

/// Regularizers with an exact proximal map, used to evaluate the bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum RegularizerForm {
    /// `sigma/2 ||w||^2`.
    SquaredNorm { sigma: f64 },
    /// `weight/2 dist(w, Q)^2`. Not convex.
    ScaledSqDist { grid: QuantizationGrid, weight: f64 },
    /// `dist(w, Q)`. Not convex.
    Dist { grid: QuantizationGrid },
}

impl RegularizerForm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SquaredNorm { .. } => "squared_norm",
            Self::ScaledSqDist { .. } => "scaled_sq_dist",
            Self::Dist { .. } => "dist",
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Self::SquaredNorm { .. })
    }

    /// Modulus of strong convexity, 0 if none.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => *sigma,
            _ => 0.0,
        }
    }

    pub fn value_scalar(&self, x: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => 0.5 * sigma * x * x,
            Self::ScaledSqDist { grid, weight } => {
                let d = grid.dist(x);
                0.5 * weight * d * d
            }
            Self::Dist { grid } => grid.dist(x),
        }
    }

    pub fn value(&self, w: &Weights) -> f64 {
        w.iter().map(|x| self.value_scalar(x)).collect::<CompensatedSum>().value()
    }

    /// Gradient where the form is smooth everywhere.
    pub fn gradient(&self, w: &Weights) -> Option<Weights> {
        match self {
            Self::SquaredNorm { sigma } => Some(w.scale(*sigma)),
            _ => None,
        }
    }

    /// Global minimizer of `1/(2 gamma) (w - x)^2 + r(w)`; `gamma = inf` is the
    /// hard limit.
    pub fn prox_scalar(&self, x: f64, gamma: f64) -> f64 {
        match self {
            Self::SquaredNorm { sigma } => {
                if gamma.is_infinite() {
                    0.0
                } else {
                    x / (1.0 + gamma * sigma)
                }
            }
            Self::ScaledSqDist { grid, weight } => {
                let q = grid.project_unchecked(x);
                if gamma.is_infinite() {
                    q
                } else {
                    let k = gamma * weight;
                    x + k / (1.0 + k) * (q - x)
                }
            }
            Self::Dist { grid } => {
                let q = grid.project_unchecked(x);
                let d = x - q;
                if d.abs() <= gamma {
                    q
                } else {
                    x - gamma * d.signum()
                }
            }
        }
    }

    pub fn prox(&self, w: &Weights, gamma: f64) -> Weights {
        w.map(|x| self.prox_scalar(x, gamma))
    }

    /// Quantizer with the same map, when one exists. For `Dist` it only
    /// agrees while the sharpness stays below half the smallest spacing.
    pub fn paired_quantizer(&self) -> Option<QuantizerSpec> {
        match self {
            Self::SquaredNorm { .. } => None,
            Self::ScaledSqDist { grid, weight } => QuantizerSpec::binary_relax(grid.clone(), *weight).ok(),
            Self::Dist { grid } => PiecewiseLinearQuantizer::new(grid.clone(), 1.0, 1.0)
                .ok()
                .map(|q| QuantizerSpec::PiecewiseLinear(q.unclamped())),
        }
    }
}

/// The form's prox at sharpness `s` is `P^s_r`.
impl Quantizer for RegularizerForm {
    fn quantize(&self, w: &Weights, sharpness: f64, _draw: u64) -> Result<Weights> {
        for x in w.iter() {
            finite("regularizer prox input", x)?;
        }
        Ok(self.prox(w, sharpness))
    }

    /// Grid forms project; `SquaredNorm` has no grid and leaves weights as they are.
    fn hard_quantize(&self, w: &Weights) -> Result<Weights> {
        match self {
            Self::SquaredNorm { .. } => Ok(w.clone()),
            Self::ScaledSqDist { grid, .. } | Self::Dist { grid } => Ok(w.map(|x| grid.project_unchecked(x))),
        }
    }

    fn quantizes_group(&self, _group: &str) -> bool {
        !matches!(self, Self::SquaredNorm { .. })
    }
}
