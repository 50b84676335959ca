//! Probe-based checks that a univariate map is a proximal map: nondecreasing,
//! finite, and with a closed graph at its jumps.

use super::spec::QuantizerSpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AxiomReport {
    pub probes: usize,
    /// Consecutive sorted probe pairs where the map decreases. Zero here is
    /// equivalent to monotonicity over all probe pairs.
    pub monotonicity_violations: usize,
    pub first_violation: Option<(f64, f64)>,
    pub non_finite: usize,
    pub jumps: usize,
    /// Jumps where the value at the jump lies outside its one-sided limits.
    pub closed_graph_failures: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0 && self.non_finite == 0 && self.closed_graph_failures == 0
    }
}

/// Evenly spaced probes on `[lo, hi]`, both ends included.
pub fn probe_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn check_prox_axioms(spec: &QuantizerSpec, probes: &[f64], sharpness: f64) -> Result<AxiomReport> {
    spec.eval_scalar(0.0, sharpness, 0)?;
    Ok(check_map_axioms(|w| spec.eval_scalar(w, sharpness, 0).unwrap_or(f64::NAN), probes))
}

/// Same checks for an arbitrary map.
pub fn check_map_axioms(f: impl Fn(f64) -> f64, probes: &[f64]) -> AxiomReport {
    let mut xs: Vec<f64> = probes.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut rep = AxiomReport { probes: xs.len(), ..Default::default() };
    rep.non_finite = ys.iter().filter(|y| !y.is_finite()).count();
    let span = xs.last().copied().unwrap_or(0.0) - xs.first().copied().unwrap_or(0.0);
    let jump_tol = 1e-3 * span.max(1.0);
    for i in 1..xs.len() {
        let dy = ys[i] - ys[i - 1];
        if dy < 0.0 {
            rep.monotonicity_violations += 1;
            rep.first_violation.get_or_insert((xs[i - 1], xs[i]));
        } else if dy > jump_tol {
            rep.jumps += 1;
            if !closed_at_jump(&f, xs[i - 1], xs[i]) {
                rep.closed_graph_failures += 1;
            }
        }
    }
    rep
}

/// Bisects to the steepest point in `[a, b]` and checks that the values on
/// both sides of it sit between the nearby one-sided limits.
fn closed_at_jump(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> bool {
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm - fa >= fb - fm {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    let d = 1e-9 * (1.0 + a.abs());
    let (left, right) = (f(a - d), f(b + d));
    let tol = 1e-12 * (1.0 + left.abs().max(right.abs()));
    [fa, fb].iter().all(|&v| v >= left - tol && v <= right + tol)
}

/// Levels that are not fixed points, and plateau points that leave their level.
pub fn check_fixed_points(spec: &QuantizerSpec, sharpness: f64) -> Result<Vec<f64>> {
    let mut bad = Vec::new();
    let Some(grid) = spec.first_grid() else { return Ok(bad) };
    for &q in grid.levels() {
        if spec.eval_scalar(q, sharpness, 0)? != q {
            bad.push(q);
        }
    }
    if let QuantizerSpec::PiecewiseLinear(p) = spec {
        let rho = if p.rho == 0.0 { 0.0 } else { p.rho * sharpness };
        let levels = grid.levels();
        for (k, &q) in levels.iter().enumerate() {
            let lo = if k == 0 { q } else { grid.midpoints()[k - 1].max(q - rho) };
            let hi = if k + 1 == levels.len() { q } else { grid.midpoints()[k].min(q + rho) };
            for i in 0..=16 {
                let w = if i == 16 { hi } else { lo + (hi - lo) * i as f64 / 16.0 };
                // the plateau is closed except where it touches a midpoint
                if grid.midpoints().contains(&w) {
                    continue;
                }
                if spec.eval_scalar(w, sharpness, 0)? != q {
                    bad.push(w);
                }
            }
        }
    }
    Ok(bad)
}
