use crate::error::{finite, Error, Result};

/// Strictly increasing quantization levels with their midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationGrid {
    levels: Vec<f64>,
    midpoints: Vec<f64>,
}

impl QuantizationGrid {
    /// Sorts the levels; duplicates and non-finite values are rejected.
    pub fn new(levels: &[f64]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 levels, got {}", levels.len())));
        }
        if let Some(v) = levels.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite level {v}")));
        }
        let mut levels = levels.to_vec();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Some(w) = levels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrid(format!("duplicate level {}", w[0])));
        }
        let midpoints = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { levels, midpoints })
    }

    pub fn binary() -> Self {
        Self::new(&[-1.0, 1.0]).unwrap()
    }

    pub fn ternary() -> Self {
        Self::new(&[-1.0, 0.0, 1.0]).unwrap()
    }

    pub fn quaternary() -> Self {
        Self::new(&[-1.0, -0.3, 0.3, 1.0]).unwrap()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn lo(&self) -> f64 {
        self.levels[0]
    }

    pub fn hi(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Index of the cell `[q_k, q_{k+1}]` containing `w`, clamped to the outer cells.
    pub(crate) fn cell(&self, w: f64) -> usize {
        let n = self.levels.len();
        let k = self.levels.partition_point(|&q| q <= w);
        k.saturating_sub(1).min(n - 2)
    }

    /// Nearest level; exact midpoints go to the upper level.
    pub fn project(&self, w: f64) -> Result<f64> {
        finite("project", w)?;
        Ok(self.project_unchecked(w))
    }

    pub(crate) fn project_unchecked(&self, w: f64) -> f64 {
        let k = self.cell(w);
        if w >= self.midpoints[k] {
            self.levels[k + 1]
        } else {
            self.levels[k]
        }
    }

    /// Distance from `w` to the nearest level.
    pub fn dist(&self, w: f64) -> f64 {
        (w - self.project_unchecked(w)).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_midpoint() {
        let g = QuantizationGrid::new(&[-1.0, 1.0]).unwrap();
        assert_eq!(g.midpoints(), &[0.0]);
    }

    #[test]
    fn quaternary_midpoints() {
        let g = QuantizationGrid::new(&[-1.0, -0.3, 0.3, 1.0]).unwrap();
        let m = g.midpoints();
        for (a, b) in m.iter().zip([-0.65, 0.0, 0.65]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(QuantizationGrid::new(&[1.0, 1.0]).is_err());
        assert!(QuantizationGrid::new(&[1.0]).is_err());
        assert!(QuantizationGrid::new(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let g = QuantizationGrid::new(&[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(g.levels(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn projection() {
        let b = QuantizationGrid::binary();
        assert_eq!(b.project(0.2).unwrap(), 1.0);
        assert_eq!(b.project(0.0).unwrap(), 1.0);
        assert_eq!(b.project(-0.2).unwrap(), -1.0);
        let t = QuantizationGrid::ternary();
        assert_eq!(t.project(-0.7).unwrap(), -1.0);
        assert_eq!(t.project(-0.5).unwrap(), 0.0);
        assert_eq!(t.project(7.0).unwrap(), 1.0);
        assert_eq!(t.project(-7.0).unwrap(), -1.0);
        assert!(t.project(f64::INFINITY).is_err());
    }
}
