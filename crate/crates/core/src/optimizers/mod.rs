//! The two-line update family. With `w` the quantized and `w*` the continuous
//! weights, and `g(x)` a sampled gradient at `x`:
//!
//! | kind | quantize        | update                        |
//! |------|-----------------|-------------------------------|
//! | BC   | `w = P(w*)`     | `w* <- w* - eta g(w)`         |
//! | PC   | `w = P_s(w*)`   | `w* <- w* - eta g(w)`         |
//! | PQ   | `w = P_s(w*)`   | `w* <- w - eta g(w)`          |
//! | rPC  | `w = P_s(w*)`   | `w* <- w - eta g(w*)`         |
//! | PTQ  | `w = P_s(w*)`   | `w* <- w* - eta g(w*)`        |
//!
//! BC quantizes at sharpness 1; the others use the schedule's sharpness `s`.

mod trajectory;

pub use trajectory::{ergodic_average, AveragingWeights, Snapshot, Trajectory};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{Problem, SampleSelector};
use crate::quantizers::Quantizer;
use crate::schedules::{ScheduleState, StepSchedule};
use crate::weights::Weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Bc,
    Pq,
    Rpc,
    Pc,
    Ptq,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [Self::Bc, Self::Pq, Self::Rpc, Self::Pc, Self::Ptq];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bc => "bc",
            Self::Pq => "pq",
            Self::Rpc => "rpc",
            Self::Pc => "pc",
            Self::Ptq => "ptq",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unsupported(format!("optimizer kind `{s}` (expected bc, pq, rpc, pc, ptq)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub w_star: Weights,
    pub w_quant: Weights,
    pub schedule: ScheduleState,
    pub step: u64,
    pub rng_seed: u64,
    pub kind: OptimizerKind,
    /// Groups held at their hard-quantized values.
    pub frozen: Vec<String>,
}

/// Everything a step needs besides the state.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub problem: &'a Problem,
    pub quantizer: &'a dyn Quantizer,
    pub schedule: &'a StepSchedule,
    /// `None` for full-batch gradients.
    pub batch_size: Option<usize>,
}

impl<'a> StepContext<'a> {
    pub fn new(problem: &'a Problem, quantizer: &'a dyn Quantizer, schedule: &'a StepSchedule) -> Self {
        Self { problem, quantizer, schedule, batch_size: None }
    }

    pub fn with_batch_size(mut self, batch_size: Option<usize>) -> Self {
        self.batch_size = batch_size;
        self
    }

    fn sharpness(&self, kind: OptimizerKind, s: &ScheduleState) -> f64 {
        match kind {
            OptimizerKind::Bc => 1.0,
            _ => self.schedule.sharpness_at(s),
        }
    }

    pub fn selector(&self, seed: u64, step: u64) -> SampleSelector {
        match (self.batch_size, self.problem.n_samples()) {
            (Some(batch_size), Some(_)) => SampleSelector::Minibatch { seed, batch_size, step },
            _ => SampleSelector::Full,
        }
    }
}

impl TrainState {
    /// `w*_1 = w0`, `w_1` its quantization at the initial sharpness.
    pub fn new(kind: OptimizerKind, w0: Weights, ctx: &StepContext, seed: u64) -> Result<Self> {
        ctx.problem.layout().check_same_layout(&w0)?;
        let schedule = ScheduleState::initial();
        let w_quant = ctx.quantizer.quantize(&w0, ctx.sharpness(kind, &schedule), 0)?;
        Ok(Self { w_star: w0, w_quant, schedule, step: 0, rng_seed: seed, kind, frozen: Vec::new() })
    }

    /// Point the gradient is sampled at.
    pub fn gradient_point(&self) -> &Weights {
        match self.kind {
            OptimizerKind::Bc | OptimizerKind::Pc | OptimizerKind::Pq => &self.w_quant,
            OptimizerKind::Rpc | OptimizerKind::Ptq => &self.w_star,
        }
    }

    fn anchor(&self) -> &Weights {
        match self.kind {
            OptimizerKind::Bc | OptimizerKind::Pc | OptimizerKind::Ptq => &self.w_star,
            OptimizerKind::Pq | OptimizerKind::Rpc => &self.w_quant,
        }
    }

    /// Freezes every quantized group at its hard-quantized value.
    pub fn hard_quantize(&mut self, quantizer: &dyn Quantizer) -> Result<()> {
        let hard = quantizer.hard_quantize(&self.w_star)?;
        for (i, g) in hard.groups.iter().enumerate() {
            if quantizer.quantizes_group(&g.name) {
                self.w_star.groups[i].values.clone_from(&g.values);
                self.w_quant.groups[i].values.clone_from(&g.values);
                if !self.frozen.contains(&g.name) {
                    self.frozen.push(g.name.clone());
                }
            }
        }
        Ok(())
    }
}

/// Sampled gradient at the state's gradient point.
pub fn sample_gradient(state: &TrainState, ctx: &StepContext) -> Result<Weights> {
    let sel = ctx.selector(state.rng_seed, state.step);
    let g = ctx.problem.grad(state.gradient_point(), sel)?;
    if !g.all_finite() {
        return Err(Error::NonFiniteGradient(state.step));
    }
    Ok(g)
}

/// One update of `state.kind` with a precomputed gradient.
pub fn apply_step(state: &TrainState, grad: &Weights, ctx: &StepContext) -> Result<TrainState> {
    let schedule = state.schedule.advance(ctx.schedule)?;
    let mut w_star = state.anchor().axpy(-schedule.eta, grad)?;
    let step = state.step + 1;
    let mut w_quant = ctx.quantizer.quantize(&w_star, ctx.sharpness(state.kind, &schedule), step)?;
    for name in &state.frozen {
        let i = w_star.groups.iter().position(|g| &g.name == name).ok_or_else(|| {
            Error::GroupMismatch(format!("frozen group `{name}` missing"))
        })?;
        w_star.groups[i].values.clone_from(&state.w_star.groups[i].values);
        w_quant.groups[i].values.clone_from(&state.w_quant.groups[i].values);
    }
    Ok(TrainState { w_star, w_quant, schedule, step, ..state.clone() })
}

/// One update of `state.kind`.
pub fn step(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    apply_step(state, &sample_gradient(state, ctx)?, ctx)
}

fn step_as(kind: OptimizerKind, state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    let s = TrainState { kind, ..state.clone() };
    step(&s, ctx)
}

/// BinaryConnect: gradient at `w`, update applied to `w*`.
pub fn step_bc(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    step_as(OptimizerKind::Bc, state, ctx)
}

/// ProxQuant: proximal gradient on `w`.
pub fn step_pq(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    step_as(OptimizerKind::Pq, state, ctx)
}

/// reverse ProxConnect: gradient at `w*`, update anchored at `w`.
pub fn step_rpc(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    step_as(OptimizerKind::Rpc, state, ctx)
}

/// ProxConnect: BC with the time-sharpened quantizer.
pub fn step_pc(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    step_as(OptimizerKind::Pc, state, ctx)
}

/// Post-training quantization: plain SGD on `w*`; `w` is for reporting only.
pub fn step_ptq(state: &TrainState, ctx: &StepContext) -> Result<TrainState> {
    step_as(OptimizerKind::Ptq, state, ctx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: OptimizerKind,
    pub steps: u64,
    pub seed: u64,
    /// Step after which quantized groups are hard-quantized and frozen;
    /// defaults to the final step.
    pub hard_quantize_at: Option<u64>,
    /// Runs stop when `max |w*|` exceeds this.
    pub divergence_bound: f64,
}

impl RunConfig {
    pub fn new(kind: OptimizerKind, steps: u64, seed: u64) -> Self {
        Self { kind, steps, seed, hard_quantize_at: None, divergence_bound: 1e6 }
    }
}

/// Step-by-step driver; every call to [`Runner::next_snapshot`] yields the
/// current state together with the gradient sampled there.
pub struct Runner<'a> {
    ctx: StepContext<'a>,
    cfg: RunConfig,
    state: TrainState,
}

impl<'a> Runner<'a> {
    pub fn new(ctx: StepContext<'a>, cfg: RunConfig, w0: Weights) -> Result<Self> {
        let state = TrainState::new(cfg.kind, w0, &ctx, cfg.seed)?;
        Self::resume(ctx, cfg, state)
    }

    pub fn resume(ctx: StepContext<'a>, cfg: RunConfig, state: TrainState) -> Result<Self> {
        if !(cfg.divergence_bound > 0.0) {
            return Err(Error::InvalidProblem(format!("divergence bound must be > 0, got {}", cfg.divergence_bound)));
        }
        if state.kind != cfg.kind {
            return Err(Error::Checkpoint(format!("state is {} but run asks for {}", state.kind, cfg.kind)));
        }
        Ok(Self { ctx, cfg, state })
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn done(&self) -> bool {
        self.state.step >= self.cfg.steps
    }

    fn snapshot(&self, grad: Weights) -> Snapshot {
        Snapshot {
            t: self.state.step,
            w_star: self.state.w_star.clone(),
            w_quant: self.state.w_quant.clone(),
            schedule: self.state.schedule,
            sharpness: self.ctx.sharpness(self.state.kind, &self.state.schedule),
            grad_norm: grad.norm(),
            grad: Some(grad),
        }
    }

    /// Snapshot of the current state, then one step if the run is not done.
    pub fn next_snapshot(&mut self) -> Result<Snapshot> {
        let g = sample_gradient(&self.state, &self.ctx)?;
        let snap = self.snapshot(g);
        if self.done() {
            return Ok(snap);
        }
        let mut next = apply_step(&self.state, snap.grad.as_ref().unwrap(), &self.ctx)?;
        let norm = next.w_star.norm_inf();
        if !(norm <= self.cfg.divergence_bound) {
            return Err(Error::Diverged { step: next.step, norm });
        }
        if Some(next.step) == self.cfg.hard_quantize_at.filter(|&h| h < self.cfg.steps) {
            next.hard_quantize(self.ctx.quantizer)?;
        }
        self.state = next;
        Ok(snap)
    }

    pub fn terminal(&self) -> Result<Weights> {
        self.ctx.quantizer.hard_quantize(&self.state.w_star)
    }

    /// Runs to completion.
    pub fn run_to_end(mut self) -> Result<Trajectory> {
        let mut snapshots = Vec::with_capacity((self.cfg.steps - self.state.step.min(self.cfg.steps)) as usize + 1);
        loop {
            let last = self.done();
            snapshots.push(self.next_snapshot()?);
            if last {
                break;
            }
        }
        let terminal = self.terminal()?;
        Ok(Trajectory { snapshots, terminal, final_state: self.state })
    }
}

/// Runs `cfg.steps` steps from the problem's seeded initialization.
pub fn run(ctx: StepContext, cfg: RunConfig) -> Result<Trajectory> {
    let w0 = ctx.problem.init_weights(cfg.seed);
    run_from(ctx, cfg, w0)
}

pub fn run_from(ctx: StepContext, cfg: RunConfig, w0: Weights) -> Result<Trajectory> {
    Runner::new(ctx, cfg, w0)?.run_to_end()
}

/// `|| w* - (P^{1/pi}(w*) - eta grad l(w*)) ||`, zero at fixed points of rPC.
pub fn rpc_fixed_point_residual(
    w_star: &Weights,
    problem: &Problem,
    quantizer: &dyn Quantizer,
    eta: f64,
    pi: f64,
) -> Result<f64> {
    let p = quantizer.quantize(w_star, 1.0 / pi, 0)?;
    let g = problem.grad(w_star, SampleSelector::Full)?;
    Ok(w_star.sub(&p.axpy(-eta, &g)?)?.norm())
}

#[cfg(test)]
mod tests;
