use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::QuantizationGrid;
use super::plq::PiecewiseLinearQuantizer;
use super::Quantizer;
use crate::error::{finite, Error, Result};
use crate::weights::Weights;

/// Declarative quantizer. Every variant is a proximal map of some regularizer,
/// and `average` / `per_group` keep that property.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerSpec {
    Identity,
    Projector(QuantizationGrid),
    PiecewiseLinear(PiecewiseLinearQuantizer),
    /// `(w + mu * P_Q(w)) / (1 + mu)`.
    BinaryRelax { grid: QuantizationGrid, mu: f64 },
    /// `sign(w) (eps |w| + 1/mu) / (eps + 1/mu)` on `|w| <= 1`.
    Example43 { epsilon: f64, mu: f64 },
    Average(Vec<(f64, QuantizerSpec)>),
    PerGroup(Vec<(String, QuantizerSpec)>),
    /// One component per call, chosen from a stream keyed on `(seed, draw)`.
    RandomSelect { specs: Vec<QuantizerSpec>, seed: u64 },
}

/// `sign(w) (eps |w| + kappa) / (eps + kappa)` with `|w|` clipped to 1 and `sign(0) = 1`.
pub fn example43_map(epsilon: f64, mu: f64, w: f64) -> Result<f64> {
    check_example43(epsilon, mu)?;
    finite("example43_map", w)?;
    Ok(example43_kappa(epsilon, 1.0 / mu, w))
}

fn check_example43(epsilon: f64, mu: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidQuantizer(format!(
            "example43 needs eps > 0 and mu > 0, got eps={epsilon} mu={mu}"
        )));
    }
    Ok(())
}

fn example43_kappa(epsilon: f64, kappa: f64, w: f64) -> f64 {
    let s = if w >= 0.0 { 1.0 } else { -1.0 };
    if kappa.is_infinite() {
        return s;
    }
    s * (epsilon * w.abs().min(1.0) + kappa) / (epsilon + kappa)
}

fn relax(grid: &QuantizationGrid, mu: f64, w: f64) -> f64 {
    let p = grid.project_unchecked(w);
    if mu.is_infinite() {
        p
    } else {
        // written as a step toward p so grid points stay exact
        w + mu / (1.0 + mu) * (p - w)
    }
}

fn scaled(x: f64, s: f64) -> f64 {
    if x == 0.0 || s == 0.0 {
        0.0
    } else {
        x * s
    }
}

/// Index drawn by `random_select` for a given draw counter.
pub fn random_select_index(seed: u64, draw: u64, n: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng.gen_range(0..n)
}

impl QuantizerSpec {
    pub fn projector(levels: &[f64]) -> Result<Self> {
        Ok(Self::Projector(QuantizationGrid::new(levels)?))
    }

    pub fn binary_relax(grid: QuantizationGrid, mu: f64) -> Result<Self> {
        let s = Self::BinaryRelax { grid, mu };
        s.validate()?;
        Ok(s)
    }

    pub fn example43(epsilon: f64, mu: f64) -> Result<Self> {
        check_example43(epsilon, mu)?;
        Ok(Self::Example43 { epsilon, mu })
    }

    pub fn average(parts: Vec<(f64, QuantizerSpec)>) -> Result<Self> {
        let s = Self::Average(parts);
        s.validate()?;
        Ok(s)
    }

    pub fn per_group(parts: Vec<(&str, QuantizerSpec)>) -> Result<Self> {
        let s = Self::PerGroup(parts.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
        s.validate()?;
        Ok(s)
    }

    pub fn random_select(specs: Vec<QuantizerSpec>, seed: u64) -> Result<Self> {
        let s = Self::RandomSelect { specs, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity | Self::Projector(_) => Ok(()),
            Self::PiecewiseLinear(q) => q.validate(),
            Self::BinaryRelax { mu, .. } => {
                if *mu >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidQuantizer(format!("binary_relax mu must be >= 0, got {mu}")))
                }
            }
            Self::Example43 { epsilon, mu } => check_example43(*epsilon, *mu),
            Self::Average(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidQuantizer("empty average".into()));
                }
                if let Some((a, _)) = parts.iter().find(|(a, _)| !(*a >= 0.0) || !a.is_finite()) {
                    return Err(Error::InvalidQuantizer(format!("average weight {a} is negative")));
                }
                let total: f64 = parts.iter().map(|(a, _)| a).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidQuantizer(format!("average weights sum to {total}, not 1")));
                }
                parts.iter().try_for_each(|(_, s)| s.validate())
            }
            Self::PerGroup(parts) => {
                for (i, (k, s)) in parts.iter().enumerate() {
                    if parts[..i].iter().any(|(j, _)| j == k) {
                        return Err(Error::InvalidQuantizer(format!("group `{k}` listed twice")));
                    }
                    if matches!(s, Self::PerGroup(_)) {
                        return Err(Error::InvalidQuantizer("nested per_group".into()));
                    }
                    s.validate()?;
                }
                Ok(())
            }
            Self::RandomSelect { specs, .. } => {
                if specs.is_empty() {
                    return Err(Error::InvalidQuantizer("empty random_select".into()));
                }
                specs.iter().try_for_each(|s| s.validate())
            }
        }
    }

    /// Coordinatewise map at sharpness `s`. Fails on `per_group`.
    pub fn eval_scalar(&self, w: f64, s: f64, draw: u64) -> Result<f64> {
        finite("quantizer", w)?;
        self.eval_unchecked(w, s, draw)
    }

    fn eval_unchecked(&self, w: f64, s: f64, draw: u64) -> Result<f64> {
        Ok(match self {
            Self::Identity => w,
            Self::Projector(g) => g.project_unchecked(w),
            Self::PiecewiseLinear(q) => q.eval_with(w, scaled(q.rho, s), scaled(q.varrho, s), 1.0),
            Self::BinaryRelax { grid, mu } => relax(grid, scaled(*mu, s), w),
            Self::Example43 { epsilon, mu } => example43_kappa(*epsilon, scaled(1.0 / mu, s), w),
            Self::Average(parts) => {
                // offsets from the first part, so agreeing parts give an exact result
                let base = parts[0].1.eval_unchecked(w, s, draw)?;
                let mut acc = 0.0;
                for (a, p) in &parts[1..] {
                    acc += a * (p.eval_unchecked(w, s, draw)? - base);
                }
                base + acc
            }
            Self::PerGroup(_) => {
                return Err(Error::Unsupported("per_group quantizer is not univariate".into()))
            }
            Self::RandomSelect { specs, seed } => {
                specs[random_select_index(*seed, draw, specs.len())].eval_unchecked(w, s, draw)?
            }
        })
    }

    /// Applies the map to every group. `draw` feeds `random_select`.
    pub fn apply(&self, weights: &Weights, s: f64, draw: u64) -> Result<Weights> {
        if let Some(v) = weights.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "quantizer weights", value: v });
        }
        match self {
            Self::PerGroup(parts) => {
                for (k, _) in parts {
                    if weights.group(k).is_none() {
                        return Err(Error::GroupMismatch(format!("quantizer names unknown group `{k}`")));
                    }
                }
                let mut out = weights.clone();
                for g in &mut out.groups {
                    let spec = parts
                        .iter()
                        .find(|(k, _)| *k == g.name)
                        .map(|(_, s)| s)
                        .ok_or_else(|| Error::GroupMismatch(format!("no quantizer for group `{}`", g.name)))?;
                    for v in &mut g.values {
                        *v = spec.eval_unchecked(*v, s, draw)?;
                    }
                }
                Ok(out)
            }
            Self::RandomSelect { specs, seed } => {
                specs[random_select_index(*seed, draw, specs.len())].apply(weights, s, draw)
            }
            _ => {
                let mut out = weights.clone();
                for g in &mut out.groups {
                    for v in &mut g.values {
                        *v = self.eval_unchecked(*v, s, draw)?;
                    }
                }
                Ok(out)
            }
        }
    }

    /// First grid found depth-first.
    pub fn first_grid(&self) -> Option<QuantizationGrid> {
        match self {
            Self::Identity => None,
            Self::Projector(g) | Self::BinaryRelax { grid: g, .. } => Some(g.clone()),
            Self::PiecewiseLinear(q) => Some(q.grid.clone()),
            Self::Example43 { .. } => Some(QuantizationGrid::binary()),
            Self::Average(parts) => parts.iter().find_map(|(_, s)| s.first_grid()),
            Self::PerGroup(parts) => parts.iter().find_map(|(_, s)| s.first_grid()),
            Self::RandomSelect { specs, .. } => specs.iter().find_map(|s| s.first_grid()),
        }
    }

    /// Map used for hard quantization: the projector onto the spec's grid.
    pub fn hard_limit(&self) -> QuantizerSpec {
        match self {
            Self::PerGroup(parts) => {
                Self::PerGroup(parts.iter().map(|(k, s)| (k.clone(), s.hard_limit())).collect())
            }
            other => other.first_grid().map(Self::Projector).unwrap_or(Self::Identity),
        }
    }

    /// The spec acting on `group`.
    pub fn for_group(&self, group: &str) -> Option<&QuantizerSpec> {
        match self {
            Self::PerGroup(parts) => parts.iter().find(|(k, _)| k == group).map(|(_, s)| s),
            other => Some(other),
        }
    }
}

impl Quantizer for QuantizerSpec {
    fn quantize(&self, w: &Weights, sharpness: f64, draw: u64) -> Result<Weights> {
        self.apply(w, sharpness, draw)
    }

    fn hard_quantize(&self, w: &Weights) -> Result<Weights> {
        self.hard_limit().apply(w, 1.0, 0)
    }

    fn quantizes_group(&self, group: &str) -> bool {
        !matches!(self.for_group(group), None | Some(QuantizerSpec::Identity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_ramp_values() {
        let v = example43_map(0.5, 1.0, 0.5).unwrap();
        assert!((v - 1.25 / 1.5).abs() < 1e-15);
        for eps in [0.1, 0.5, 3.0] {
            for mu in [0.01, 1.0, 100.0] {
                assert_eq!(example43_map(eps, mu, 1.0).unwrap(), 1.0);
                assert_eq!(example43_map(eps, mu, -1.0).unwrap(), -1.0);
            }
        }
        assert!(example43_map(0.0, 1.0, 0.5).is_err());
        assert!(example43_map(0.5, 0.0, 0.5).is_err());
        // clipped like BC weights
        assert_eq!(example43_map(0.5, 1.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn sign_ramp_limits() {
        // 1/mu -> infinity gives sign, mu -> infinity leaves w unchanged
        assert!((example43_map(0.5, 1e-12, 0.5).unwrap() - 1.0).abs() < 1e-9);
        assert!((example43_map(0.5, 1e12, 0.5).unwrap() - 0.5).abs() < 1e-9);
        let s = QuantizerSpec::example43(0.5, 1.0).unwrap();
        assert_eq!(s.eval_scalar(0.3, f64::INFINITY, 0).unwrap(), 1.0);
        assert_eq!(s.eval_scalar(-0.3, f64::INFINITY, 0).unwrap(), -1.0);
    }

    #[test]
    fn identity_and_average() {
        let w = Weights::single(vec![0.6, -0.2, 3.0]);
        assert!(QuantizerSpec::Identity.apply(&w, 5.0, 0).unwrap().bit_eq(&w));
        let avg = QuantizerSpec::average(vec![
            (0.5, QuantizerSpec::Identity),
            (0.5, QuantizerSpec::projector(&[-1.0, 1.0]).unwrap()),
        ])
        .unwrap();
        assert!((avg.eval_scalar(0.6, 1.0, 0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn average_weights_validated() {
        assert!(QuantizerSpec::average(vec![(0.7, QuantizerSpec::Identity)]).is_err());
        assert!(QuantizerSpec::average(vec![(1.5, QuantizerSpec::Identity), (-0.5, QuantizerSpec::Identity)])
            .is_err());
    }

    #[test]
    fn per_group_product() {
        let spec = QuantizerSpec::per_group(vec![
            ("A", QuantizerSpec::projector(&[-1.0, 1.0]).unwrap()),
            ("B", QuantizerSpec::Identity),
        ])
        .unwrap();
        let w = Weights::new().with_group("A", vec![0.2, -0.4]).with_group("B", vec![0.2, -0.4]);
        let out = spec.apply(&w, 1.0, 0).unwrap();
        assert_eq!(out.group("A").unwrap(), &[1.0, -1.0]);
        assert_eq!(out.group("B").unwrap(), &[0.2, -0.4]);
        assert!(spec.quantizes_group("A") && !spec.quantizes_group("B"));
        let missing = Weights::new().with_group("A", vec![0.0]);
        assert!(spec.apply(&missing, 1.0, 0).is_err());
        let extra = w.clone().with_group("C", vec![0.0]);
        assert!(spec.apply(&extra, 1.0, 0).is_err());
    }

    #[test]
    fn binary_relax_sharpness() {
        let g = QuantizationGrid::new(&[0.0, 1.0]).unwrap();
        let s = QuantizerSpec::binary_relax(g, 1.0).unwrap();
        assert!((s.eval_scalar(0.6, 1.0, 0).unwrap() - 0.8).abs() < 1e-15);
        assert!((s.eval_scalar(0.6, 3.0, 0).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(s.eval_scalar(0.6, f64::INFINITY, 0).unwrap(), 1.0);
        assert_eq!(s.eval_scalar(0.6, 0.0, 0).unwrap(), 0.6);
    }

    #[test]
    fn random_select_is_keyed_on_draw() {
        let spec = QuantizerSpec::random_select(
            vec![QuantizerSpec::Identity, QuantizerSpec::projector(&[-1.0, 1.0]).unwrap()],
            11,
        )
        .unwrap();
        let picks: Vec<f64> = (0..64).map(|d| spec.eval_scalar(0.3, 1.0, d).unwrap()).collect();
        let again: Vec<f64> = (0..64).map(|d| spec.eval_scalar(0.3, 1.0, d).unwrap()).collect();
        assert_eq!(picks, again);
        assert!(picks.contains(&0.3) && picks.contains(&1.0));
    }

    #[test]
    fn hard_limits() {
        let avg = QuantizerSpec::average(vec![
            (0.5, QuantizerSpec::Identity),
            (0.5, QuantizerSpec::projector(&[-1.0, 0.0, 1.0]).unwrap()),
        ])
        .unwrap();
        assert_eq!(avg.hard_limit(), QuantizerSpec::projector(&[-1.0, 0.0, 1.0]).unwrap());
        assert_eq!(QuantizerSpec::Identity.hard_limit(), QuantizerSpec::Identity);
        let e = QuantizerSpec::example43(0.5, 1.0).unwrap();
        assert_eq!(e.hard_quantize(&Weights::scalar(0.01)).unwrap(), Weights::scalar(1.0));
    }

    #[test]
    fn non_finite_weights_rejected() {
        let w = Weights::single(vec![0.0, f64::NAN]);
        assert!(QuantizerSpec::Identity.apply(&w, 1.0, 0).is_err());
    }
}
