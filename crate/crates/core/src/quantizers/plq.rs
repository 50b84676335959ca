use super::grid::QuantizationGrid;
use crate::error::{finite, Error, Result};

/// Value taken at an exact midpoint, where the map may jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MidpointPolicy {
    /// Right limit. For `{-1, 1}` this gives `sign(0) = 1`.
    #[default]
    Upper,
    /// Left limit.
    Lower,
}

/// Piecewise-linear proximal quantizer built from horizontal shifts `rho`
/// (plateaus around each level) and vertical shifts `varrho` (the jump
/// size at midpoints). `rho = varrho = 0` is the identity on `[q_1, q_b]`,
/// and both going to infinity gives the projector.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearQuantizer {
    pub grid: QuantizationGrid,
    pub rho: f64,
    pub varrho: f64,
    pub clip: bool,
    pub midpoint_policy: MidpointPolicy,
}

/// Shifted points of one cell `[q_k, q_{k+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPoints {
    pub q_lo: f64,
    pub q_lo_plus: f64,
    pub p_minus: f64,
    pub p: f64,
    pub p_plus: f64,
    pub q_hi_minus: f64,
    pub q_hi: f64,
}

/// `x * s`, treating `0 * inf` as 0.
fn scaled(x: f64, s: f64) -> f64 {
    if x == 0.0 || s == 0.0 {
        0.0
    } else {
        x * s
    }
}

impl PiecewiseLinearQuantizer {
    pub fn new(grid: QuantizationGrid, rho: f64, varrho: f64) -> Result<Self> {
        let q = Self { grid, rho, varrho, clip: true, midpoint_policy: MidpointPolicy::Upper };
        q.validate()?;
        Ok(q)
    }

    pub fn unclamped(mut self) -> Self {
        self.clip = false;
        self
    }

    pub fn with_policy(mut self, policy: MidpointPolicy) -> Self {
        self.midpoint_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !(self.varrho >= 0.0) {
            return Err(Error::InvalidQuantizer(format!(
                "shifts must be nonnegative, got rho={} varrho={}",
                self.rho, self.varrho
            )));
        }
        Ok(())
    }

    /// Shifted points of cell `k` for effective shifts `(rho, varrho)`.
    pub fn cell_points(&self, k: usize, rho: f64, varrho: f64) -> CellPoints {
        let q = self.grid.levels();
        let p = self.grid.midpoints()[k];
        let (q_lo, q_hi) = (q[k], q[k + 1]);
        CellPoints {
            q_lo,
            q_lo_plus: p.min(q_lo + rho),
            p_minus: q_lo.max(p - varrho),
            p,
            p_plus: q_hi.min(p + varrho),
            q_hi_minus: p.max(q_hi - rho),
            q_hi,
        }
    }

    /// Map at sharpness `s`: both shifts are multiplied by `s`.
    pub fn eval(&self, w: f64, sharpness: f64) -> Result<f64> {
        finite("piecewise-linear quantizer", w)?;
        Ok(self.eval_with(w, scaled(self.rho, sharpness), scaled(self.varrho, sharpness), 1.0))
    }

    /// Evaluation with explicit shifts. `slope_sign` multiplies the slope of
    /// every linear piece; anything but 1 breaks the map and is only used to
    /// check that the verification suites catch it.
    #[doc(hidden)]
    pub fn eval_with(&self, w: f64, rho: f64, varrho: f64, slope_sign: f64) -> f64 {
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        if rho == 0.0 && varrho == 0.0 && (!self.clip || (lo..=hi).contains(&w)) {
            return w;
        }
        if w < lo {
            return if self.clip { lo } else { self.outer(w, rho, varrho, slope_sign, true) };
        }
        if w > hi {
            return if self.clip { hi } else { self.outer(w, rho, varrho, slope_sign, false) };
        }
        let c = self.cell_points(self.grid.cell(w), rho, varrho);
        if w == c.p {
            match self.midpoint_policy {
                MidpointPolicy::Upper => {
                    if c.q_hi_minus > c.p {
                        c.p_plus
                    } else {
                        c.q_hi
                    }
                }
                MidpointPolicy::Lower => {
                    if c.q_lo_plus < c.p {
                        c.p_minus
                    } else {
                        c.q_lo
                    }
                }
            }
        } else if w <= c.q_lo_plus {
            c.q_lo
        } else if w < c.p {
            let slope = (c.p_minus - c.q_lo) / (c.p - c.q_lo_plus);
            c.q_lo + slope_sign * (w - c.q_lo_plus) * slope
        } else if w < c.q_hi_minus {
            let slope = (c.q_hi - c.p_plus) / (c.q_hi_minus - c.p);
            c.p_plus + slope_sign * (w - c.p) * slope
        } else {
            c.q_hi
        }
    }

    /// Unclamped extension: the outer cell is mirrored across the extreme
    /// level and its linear piece continued to infinity.
    fn outer(&self, w: f64, rho: f64, varrho: f64, slope_sign: f64, left: bool) -> f64 {
        let q = self.grid.levels();
        let (edge, h) = if left {
            (q[0], 0.5 * (q[1] - q[0]))
        } else {
            let b = q.len() - 1;
            (q[b], 0.5 * (q[b] - q[b - 1]))
        };
        let plateau = rho.min(h);
        if plateau >= h {
            return edge;
        }
        let lift = (h - varrho).max(0.0);
        let dist = (w - edge).abs();
        let value = if dist <= plateau {
            0.0
        } else {
            slope_sign * (dist - plateau) * lift / (h - plateau)
        };
        if left {
            edge - value
        } else {
            edge + value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plq(levels: &[f64], rho: f64, varrho: f64) -> PiecewiseLinearQuantizer {
        PiecewiseLinearQuantizer::new(QuantizationGrid::new(levels).unwrap(), rho, varrho).unwrap()
    }

    #[test]
    fn horizontal_shift_value() {
        let q = plq(&[-1.0, 0.0, 1.0], 0.2, 0.0);
        // q_2^+ = 0.2, slope (0.5 - 0)/(0.5 - 0.2) = 5/3
        let v = q.eval(0.35, 1.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let c = q.cell_points(1, 0.2, 0.0);
        assert!(((c.p_minus - c.q_lo) / (c.p - c.q_lo_plus) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn vertical_shift_matches_relaxed_projection() {
        let q = plq(&[0.0, 1.0], 0.0, 0.25);
        assert!((q.eval(0.6, 1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!((q.eval(0.4, 1.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn levels_are_fixed_points() {
        let q = plq(&[-1.0, -0.3, 0.3, 1.0], 0.1, 0.05);
        for &l in q.grid.levels() {
            assert_eq!(q.eval(l, 1.0).unwrap(), l);
            assert_eq!(q.eval(l, 7.0).unwrap(), l);
        }
    }

    #[test]
    fn huge_shifts_give_projector() {
        let q = plq(&[-1.0, 0.0, 1.0], 1e6, 1e6);
        assert_eq!(q.eval(0.49, 1.0).unwrap(), 0.0);
        assert_eq!(q.eval(0.51, 1.0).unwrap(), 1.0);
        let q = plq(&[-1.0, 0.0, 1.0], 0.1, 0.1);
        assert_eq!(q.eval(0.49, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn zero_shifts_identity_inside() {
        let q = plq(&[-1.0, 0.0, 1.0], 0.0, 0.0);
        for w in [-0.9, -0.3, 0.0, 0.2, 0.77] {
            assert!((q.eval(w, 3.0).unwrap() - w).abs() < 1e-15);
        }
        assert_eq!(q.eval(1.5, 1.0).unwrap(), 1.0);
        assert!((q.clone().unclamped().eval(1.5, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(q.eval(0.4, f64::INFINITY).unwrap(), 0.4);
    }

    #[test]
    fn midpoint_policies() {
        let q = plq(&[-1.0, 1.0], 0.0, 0.25);
        assert_eq!(q.eval(0.0, 1.0).unwrap(), 0.25);
        assert_eq!(q.clone().with_policy(MidpointPolicy::Lower).eval(0.0, 1.0).unwrap(), -0.25);
        let p = plq(&[-1.0, 1.0], 5.0, 0.0);
        assert_eq!(p.eval(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(p.with_policy(MidpointPolicy::Lower).eval(0.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn unclamped_outer_pieces() {
        // the two outer lines drawn for grid {-1,0,1}
        let a = plq(&[-1.0, 0.0, 1.0], 0.2, 0.2).unclamped();
        assert!((a.eval(-1.7, 1.0).unwrap() - (-1.7 + 0.2)).abs() < 1e-12);
        assert!((a.eval(1.7, 1.0).unwrap() - (1.7 - 0.2)).abs() < 1e-12);
        let b = plq(&[-1.0, 0.0, 1.0], 0.2, 0.0).unclamped();
        let w = -1.8;
        assert!((b.eval(w, 1.0).unwrap() - (5.0 / 3.0 * (w + 1.5) - 1.5)).abs() < 1e-12);
        let c = plq(&[-1.0, 0.0, 1.0], 0.6, 0.0).unclamped();
        assert_eq!(c.eval(-3.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn negative_shift_rejected() {
        assert!(PiecewiseLinearQuantizer::new(QuantizationGrid::binary(), -0.1, 0.0).is_err());
        assert!(plq(&[-1.0, 1.0], 0.1, 0.0).eval(f64::NAN, 1.0).is_err());
    }
}
