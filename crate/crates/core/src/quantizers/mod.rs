//! Quantization grids, the piecewise-linear proximal quantizer and its
//! special cases, and the averaging / product combinators.

mod axioms;
mod grid;
mod plq;
mod spec;

pub use axioms::{check_fixed_points, check_map_axioms, check_prox_axioms, probe_grid, AxiomReport};
pub use grid::QuantizationGrid;
pub use plq::{CellPoints, MidpointPolicy, PiecewiseLinearQuantizer};
pub use spec::{example43_map, random_select_index, QuantizerSpec};

use crate::error::Result;
use crate::weights::Weights;

/// Anything that maps continuous weights to (semi-)quantized weights at a
/// given sharpness. Implemented by [`QuantizerSpec`] and by the regularizer
/// forms of the diagnostics, whose proximal maps play the same role.
pub trait Quantizer: Send + Sync {
    fn quantize(&self, w: &Weights, sharpness: f64, draw: u64) -> Result<Weights>;
    fn hard_quantize(&self, w: &Weights) -> Result<Weights>;
    fn quantizes_group(&self, group: &str) -> bool;
}

/// Nearest level of `grid`, ties to the upper level.
pub fn project(grid: &QuantizationGrid, w: f64) -> Result<f64> {
    grid.project(w)
}
