use crate::error::Result;
use crate::optimizers::{ergodic_average, run_from, AveragingWeights, OptimizerKind, RunConfig, StepContext};
use crate::problems::Problem;
use crate::quantizers::QuantizerSpec;
use crate::schedules::StepSchedule;
use crate::weights::Weights;

/// Behaviour of BC and PC on `l = w^2/2` with the `{-1, 1}` quantizer
/// `sign(w)(eps|w| + kappa)/(eps + kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example43Report {
    /// Smallest `|w_t|` (quantized) over the final quarter of the BC run.
    pub bc_min_quantized: f64,
    /// Largest `|w*_t|` over the final quarter of the BC run.
    pub bc_amplitude: f64,
    /// Sign changes of `w*_t` over the final quarter of the BC run.
    pub bc_sign_changes: usize,
    /// `|w_bar_T|`, eta-weighted average of the PC quantized iterates.
    pub pc_ergodic: f64,
    /// `|w_T|` for PC, which need not converge.
    pub pc_last: f64,
}

/// BC at fixed `mu` with constant `eta_bc`; PC with `eta_t = eta0_pc/sqrt(t)`
/// and sharpness `1/pi_{t-1}`. Both start from `w*_1 = w0`.
pub fn example43_dichotomy(epsilon: f64, mu: f64, eta_bc: f64, eta0_pc: f64, steps: u64, w0: f64) -> Result<Example43Report> {
    let problem = Problem::half_square();
    let q = QuantizerSpec::example43(epsilon, mu)?;

    let sched = StepSchedule::constant(eta_bc)?;
    let ctx = StepContext::new(&problem, &q, &sched);
    let bc = run_from(ctx, RunConfig::new(OptimizerKind::Bc, steps, 0), Weights::scalar(w0))?;
    let tail = &bc.snapshots[bc.snapshots.len() - bc.snapshots.len() / 4..];
    let scalar = |w: &Weights| w.groups[0].values[0];
    let bc_min_quantized = tail.iter().map(|s| scalar(&s.w_quant).abs()).fold(f64::INFINITY, f64::min);
    let bc_amplitude = tail.iter().map(|s| scalar(&s.w_star).abs()).fold(0.0, f64::max);
    let bc_sign_changes =
        tail.windows(2).filter(|p| (scalar(&p[0].w_star) >= 0.0) != (scalar(&p[1].w_star) >= 0.0)).count();

    let sched = StepSchedule::polynomial(eta0_pc, 0.5)?;
    let ctx = StepContext::new(&problem, &q, &sched);
    let pc = run_from(ctx, RunConfig::new(OptimizerKind::Pc, steps, 0), Weights::scalar(w0))?;
    let avg = ergodic_average(&pc, AveragingWeights::StepSize)?;
    Ok(Example43Report {
        bc_min_quantized,
        bc_amplitude,
        bc_sign_changes,
        pc_ergodic: scalar(&avg).abs(),
        pc_last: scalar(&pc.last().w_quant).abs(),
    })
}
