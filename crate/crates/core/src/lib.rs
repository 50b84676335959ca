//! Proximal quantizers for training quantized networks: the piecewise-linear
//! quantizer family, the BC / PC / PQ / rPC / PTQ update schemes, the
//! conditional-gradient and dual-averaging views, and evaluators for their
//! convergence bounds.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod gcg;
pub mod numeric;
pub mod optimizers;
pub mod problems;
pub mod quantizers;
pub mod schedules;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{WeightGroup, Weights};
