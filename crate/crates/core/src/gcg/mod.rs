//! Generalized conditional gradient on the Fenchel dual, its Moreau-smoothed
//! version, and the identity of GCG, dual averaging and ProxConnect iterates.

mod conjugate;

pub use conjugate::DualRegularizer;


use crate::diagnostics::BoundReport;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::problems::{Problem, SampleSelector};
use crate::schedules::{ergodic_weights, gcg_sequence, ScheduleState, StepSchedule};
use crate::weights::Weights;

/// Convex loss plus a coordinatewise regularizer with closed-form conjugate,
/// optionally with the conjugate smoothed by a Moreau envelope of parameter `mu`.
#[derive(Debug, Clone)]
pub struct ClosedFormConjugate {
    pub loss: Problem,
    pub reg: DualRegularizer,
    pub smoothing: Option<f64>,
}

impl ClosedFormConjugate {
    pub fn new(loss: Problem, reg: DualRegularizer, smoothing: Option<f64>) -> Result<Self> {
        if !loss.is_convex() {
            return Err(Error::Unsupported(format!("{} loss is not convex", loss.name())));
        }
        reg.validate()?;
        match smoothing {
            Some(mu) if !(mu > 0.0 && mu.is_finite()) => {
                return Err(Error::Unsupported(format!("smoothing must be > 0, got {mu}")))
            }
            None if reg.conj_smoothness().is_none() => {
                return Err(Error::Unsupported(format!("{reg:?} has a nonsmooth conjugate; give a smoothing parameter")))
            }
            _ => {}
        }
        Ok(Self { loss, reg, smoothing })
    }

    /// Lipschitz constant of the gradient of the (smoothed) conjugate.
    pub fn smoothness(&self) -> f64 {
        match self.smoothing {
            Some(mu) => 1.0 / mu,
            None => self.reg.conj_smoothness().expect("checked in new"),
        }
    }

    /// Primal image of a dual point, `w = grad r*(w*)` or the envelope gradient.
    pub fn primal_map(&self, w_star: &Weights) -> Weights {
        match self.smoothing {
            Some(mu) => w_star.map(|y| self.reg.moreau_gradient_envelope(y, mu)),
            None => w_star.map(|y| self.reg.conj_grad(y).expect("checked in new")),
        }
    }

    /// Regularizer whose conjugate is being linearized: `r**`, plus
    /// `mu/2 ||.||^2` when smoothed.
    pub fn reg_value(&self, w: &Weights) -> f64 {
        let mu = self.smoothing.unwrap_or(0.0);
        w.iter().map(|x| self.reg.value(x) + 0.5 * mu * x * x).collect::<CompensatedSum>().value()
    }

    pub fn objective(&self, w: &Weights) -> Result<f64> {
        Ok(self.loss.loss(w)? + self.reg_value(w))
    }

    pub fn iterate_at(&self, w_star: Weights) -> Result<DualIterate> {
        let w = self.primal_map(&w_star);
        let z_star = self.loss.grad(&w, SampleSelector::Full)?.scale(-1.0);
        Ok(DualIterate { w_star, w, z_star })
    }
}

/// Dual point, its primal image and the linearization direction `-grad l(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIterate {
    pub w_star: Weights,
    pub w: Weights,
    pub z_star: Weights,
}

/// `w*' = (1 - lambda) w* + lambda z*`, then the new primal image.
pub fn gcg_step(it: &DualIterate, lambda: f64, inst: &ClosedFormConjugate) -> Result<DualIterate> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidSchedule(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let w_star = it.w_star.scale(1.0 - lambda).axpy(lambda, &it.z_star)?;
    inst.iterate_at(w_star)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcgTrajectory {
    /// `(lambda_tau, pi_tau)`, `tau = 0..=t`.
    pub seq: Vec<(f64, f64)>,
    /// Iterates `0..=t`.
    pub iterates: Vec<DualIterate>,
}

/// `steps` GCG steps from `w*_0`, with `lambda_t` taken from the schedule.
pub fn run_gcg(inst: &ClosedFormConjugate, schedule: &StepSchedule, w_star0: Weights, steps: u64) -> Result<GcgTrajectory> {
    let seq = gcg_sequence(schedule, steps)?;
    if let Some(t) = seq.iter().skip(1).position(|&(l, _)| l >= 1.0) {
        return Err(Error::InvalidSchedule(format!("lambda_{} = 1 would zero pi", t + 1)));
    }
    let mut iterates = vec![inst.iterate_at(w_star0)?];
    for &(lambda, _) in &seq[..seq.len() - 1] {
        let next = gcg_step(iterates.last().unwrap(), lambda, inst)?;
        iterates.push(next);
    }
    Ok(GcgTrajectory { seq, iterates })
}

/// `r(w) - r(w_0) - <w - w_0, w*_0>` for the linearized regularizer.
fn delta0(inst: &ClosedFormConjugate, w: &Weights, it: &DualIterate) -> Result<f64> {
    Ok(inst.reg_value(w) - inst.reg_value(&it.w) - w.sub(&it.w)?.dot(&it.w_star)?)
}

/// `sum_tau lambda_tau/pi_tau [f(w_tau) - f(w)] <= (1 - lambda_0) Delta(w, w_0)
///   + sum_tau lambda_tau^2/(2 pi_tau) L ||w*_tau - z*_tau||^2`.
pub fn thm41_bound_eval(traj: &GcgTrajectory, inst: &ClosedFormConjugate, w: &Weights) -> Result<BoundReport> {
    let l = inst.smoothness();
    let fw = inst.objective(w)?;
    let (mut lhs, mut energy) = (CompensatedSum::new(), CompensatedSum::new());
    for (it, &(lambda, pi)) in traj.iterates.iter().zip(&traj.seq) {
        lhs.add(lambda / pi * (inst.objective(&it.w)? - fw));
        energy.add(lambda * lambda / (2.0 * pi) * l * it.w_star.sub(&it.z_star)?.norm_sq());
    }
    let d0 = delta0(inst, w, &traj.iterates[0])?;
    let lambda0 = traj.seq[0].0;
    let t = traj.iterates.len() - 1;
    Ok(BoundReport {
        name: "thm41",
        lhs: lhs.value(),
        rhs: (1.0 - lambda0) * d0 + energy.value(),
        delta_start: d0,
        delta_end: 0.0,
        delta_sum: 0.0,
        drift: 0.0,
        grad_energy: energy.value(),
        eta_sum: 0.0,
        s: 0,
        t,
        sigma0: 0.0,
        smoothness: Some(l),
        asserted: true,
    })
}

/// Weighted average `sum Lambda_tau w_tau` with `Lambda ∝ lambda/pi`.
pub fn gcg_average(traj: &GcgTrajectory) -> Result<Weights> {
    let (_, lam) = ergodic_weights(&traj.seq);
    let mut avg = traj.iterates[0].w.zeros_like();
    for (it, l) in traj.iterates.iter().zip(&lam) {
        avg = avg.axpy(*l, &it.w)?;
    }
    Ok(avg)
}

/// Averaged-iterate bound: `f(w_bar) - f(w) <= (1 - lambda_0) Delta / H
///   + L/2 sum lambda_tau Lambda_tau ||w*_tau - z*_tau||^2`.
pub fn cor42_eval(traj: &GcgTrajectory, inst: &ClosedFormConjugate, w: &Weights) -> Result<BoundReport> {
    let (h, lam) = ergodic_weights(&traj.seq);
    if !(h > 0.0) {
        return Err(Error::InvalidSchedule("all lambda are zero, the average is undefined".into()));
    }
    let l = inst.smoothness();
    let mut energy = CompensatedSum::new();
    for ((it, &(lambda, _)), big) in traj.iterates.iter().zip(&traj.seq).zip(&lam) {
        energy.add(0.5 * l * lambda * big * it.w_star.sub(&it.z_star)?.norm_sq());
    }
    let d0 = delta0(inst, w, &traj.iterates[0])?;
    let avg = gcg_average(traj)?;
    Ok(BoundReport {
        name: "cor42",
        lhs: inst.objective(&avg)? - inst.objective(w)?,
        rhs: (1.0 - traj.seq[0].0) * d0 / h + energy.value(),
        delta_start: d0,
        delta_end: 0.0,
        delta_sum: 0.0,
        drift: 0.0,
        grad_energy: energy.value(),
        eta_sum: h,
        s: 0,
        t: traj.iterates.len() - 1,
        sigma0: 0.0,
        smoothness: Some(l),
        asserted: true,
    })
}

/// Largest coordinate gap between the three primal sequences.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Equivalence {
    pub gcg_vs_da: f64,
    pub gcg_vs_pc: f64,
    pub da_vs_pc: f64,
}

impl Equivalence {
    pub fn max(&self) -> f64 {
        self.gcg_vs_da.max(self.gcg_vs_pc).max(self.da_vs_pc)
    }
}

/// Runs, from the same `w*_1` and for `t >= 1`,
///
/// - GCG on the smoothed dual: `w_t = grad M^{mu_t}(w*_t)`, `w*_{t+1} = (1 - lambda_t) w*_t + lambda_t z*_t`;
/// - dual averaging: `w_t = P^{1/mu_t}(pi_{t-1} W_t / mu_t)`, `W_{t+1} = W_t - lambda_t/pi_t grad l(w_t)`;
/// - PC: `w_t = P^{1/pi_{t-1}}(W_t)`, `W_{t+1} = W_t - eta_t grad l(w_t)`;
///
/// with `mu_t = mu_scale pi_{t-1}` in the first two. At `mu_scale = 1` all three agree.
pub fn da_equivalence_check(
    loss: &Problem,
    reg: &DualRegularizer,
    schedule: &StepSchedule,
    w_star_1: &Weights,
    steps: u64,
    mu_scale: f64,
) -> Result<Equivalence> {
    if !loss.is_convex() {
        return Err(Error::Unsupported(format!("{} loss is not convex", loss.name())));
    }
    reg.validate()?;
    if !(mu_scale > 0.0) {
        return Err(Error::InvalidSchedule(format!("mu scale must be > 0, got {mu_scale}")));
    }
    let grad = |w: &Weights| loss.grad(w, SampleSelector::Full);
    let (mut a, mut b, mut c) = (w_star_1.clone(), w_star_1.clone(), w_star_1.clone());
    let mut state = ScheduleState::initial();
    let mut eq = Equivalence::default();
    for t in 1..=steps {
        let prev_pi = state.pi;
        let mu = mu_scale * prev_pi;
        let wa = a.map(|y| reg.moreau_gradient_envelope(y, mu));
        let wb = b.map(|y| reg.prox(prev_pi * y / mu, 1.0 / mu));
        let wc = c.map(|y| reg.prox(y, state.inverse_pi()));
        eq.gcg_vs_da = eq.gcg_vs_da.max(wa.max_abs_diff(&wb)?);
        eq.gcg_vs_pc = eq.gcg_vs_pc.max(wa.max_abs_diff(&wc)?);
        eq.da_vs_pc = eq.da_vs_pc.max(wb.max_abs_diff(&wc)?);
        if t == steps {
            break;
        }
        state = state.advance(schedule)?;
        if !(state.lambda < 1.0) {
            return Err(Error::InvalidSchedule(format!("lambda_{t} = 1 would zero pi")));
        }
        let za = grad(&wa)?.scale(-1.0);
        a = a.scale(1.0 - state.lambda).axpy(state.lambda, &za)?;
        b = b.axpy(-state.lambda / state.pi, &grad(&wb)?)?;
        c = c.axpy(-state.eta, &grad(&wc)?)?;
    }
    Ok(eq)
}

/// Worst gaps between the two envelope-gradient routes, central differences
/// of the envelope, and the conjugate identity `M* = r** + mu/2 w^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MoreauCheck {
    pub route_gap: f64,
    pub fd_gap: f64,
    pub conjugate_gap: f64,
}

pub fn moreau_check(reg: &DualRegularizer, mu: f64, probes: &[f64]) -> Result<MoreauCheck> {
    reg.validate()?;
    if !(mu > 0.0) {
        return Err(Error::Unsupported(format!("smoothing must be > 0, got {mu}")));
    }
    let h = 1e-6;
    let mut out = MoreauCheck::default();
    for &y in probes {
        let g = reg.moreau_gradient(y, mu);
        out.route_gap = out.route_gap.max((g - reg.moreau_gradient_envelope(y, mu)).abs());
        let fd = (reg.moreau_value(y + h, mu) - reg.moreau_value(y - h, mu)) / (2.0 * h);
        out.fd_gap = out.fd_gap.max((fd - g).abs());
        // the sup over y of w y - M(y) is attained at y = mu w + grad r**(w), inside this bracket for |w| <= 10
        let w = g;
        if reg.value(w).is_finite() && w.abs() <= 10.0 {
            let b = 10.0 * (1.0 + mu) + 100.0;
            let ystar = crate::numeric::golden_max(|z| w * z - reg.moreau_value(z, mu), -b, b, 400);
            let conj = w * ystar - reg.moreau_value(ystar, mu);
            let expect = reg.value(w) + 0.5 * mu * w * w;
            out.conjugate_gap = out.conjugate_gap.max((conj - expect).abs());
        }
    }
    Ok(out)
}
