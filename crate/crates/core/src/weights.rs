//! Named weight groups, the common currency of problems, quantizers and optimizers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightGroup {
    pub name: String,
    pub values: Vec<f64>,
}

/// Ordered list of named real vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weights {
    pub groups: Vec<WeightGroup>,
}

impl Weights {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single group named `w`.
    pub fn single(values: Vec<f64>) -> Self {
        Self::new().with_group("w", values)
    }

    pub fn scalar(value: f64) -> Self {
        Self::single(vec![value])
    }

    pub fn with_group(mut self, name: &str, values: Vec<f64>) -> Self {
        self.groups.push(WeightGroup { name: name.to_string(), values });
        self
    }

    pub fn group(&self, name: &str) -> Option<&[f64]> {
        self.groups.iter().find(|g| g.name == name).map(|g| g.values.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All coordinates, group by group.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().flat_map(|g| g.values.iter().copied())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Same layout as `self`, values taken from `flat`.
    pub fn from_flat_like(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!("expected {} values, got {}", self.len(), flat.len())));
        }
        let mut out = self.clone();
        let mut k = 0;
        for g in &mut out.groups {
            for v in &mut g.values {
                *v = flat[k];
                k += 1;
            }
        }
        Ok(out)
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|_| 0.0)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            for v in &mut g.values {
                *v = f(*v);
            }
        }
        out
    }

    pub fn check_same_layout(&self, other: &Weights) -> Result<()> {
        if self.groups.len() != other.groups.len() {
            return Err(Error::GroupMismatch(format!(
                "{} groups vs {}",
                self.groups.len(),
                other.groups.len()
            )));
        }
        for (a, b) in self.groups.iter().zip(&other.groups) {
            if a.name != b.name || a.values.len() != b.values.len() {
                return Err(Error::GroupMismatch(format!(
                    "{}[{}] vs {}[{}]",
                    a.name,
                    a.values.len(),
                    b.name,
                    b.values.len()
                )));
            }
        }
        Ok(())
    }

    pub fn zip_map(&self, other: &Weights, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_layout(other)?;
        let mut out = self.clone();
        for (g, h) in out.groups.iter_mut().zip(&other.groups) {
            for (v, &u) in g.values.iter_mut().zip(&h.values) {
                *v = f(*v, u);
            }
        }
        Ok(out)
    }

    /// `self + a * x`
    pub fn axpy(&self, a: f64, x: &Weights) -> Result<Self> {
        self.zip_map(x, |v, u| v + a * u)
    }

    pub fn sub(&self, x: &Weights) -> Result<Self> {
        self.zip_map(x, |v, u| v - u)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn dot(&self, other: &Weights) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.iter().fold(0.0, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn max_abs_diff(&self, other: &Weights) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Bitwise equality, distinguishing -0.0 and NaN payloads.
    pub fn bit_eq(&self, other: &Weights) -> bool {
        self.check_same_layout(other).is_ok()
            && self.iter().zip(other.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let w = Weights::new().with_group("a", vec![1.0, 2.0]).with_group("b", vec![3.0]);
        let back = w.from_flat_like(&w.to_flat()).unwrap();
        assert!(w.bit_eq(&back));
        assert!(w.from_flat_like(&[1.0]).is_err());
    }

    #[test]
    fn layout_mismatch_rejected() {
        let a = Weights::single(vec![1.0, 2.0]);
        let b = Weights::new().with_group("v", vec![1.0, 2.0]);
        assert!(a.dot(&b).is_err());
        assert_eq!(a.dot(&a).unwrap(), 5.0);
    }

    #[test]
    fn norm_inf_sees_nan() {
        assert!(Weights::single(vec![1.0, f64::NAN]).norm_inf().is_nan());
    }
}
