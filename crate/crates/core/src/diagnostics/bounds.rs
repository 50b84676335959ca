use super::forms::RegularizerForm;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::optimizers::{OptimizerKind, Trajectory};
use crate::problems::{Problem, SampleSelector};
use crate::schedules::{mu_rate_for, ScheduleState, StepSchedule};
use crate::weights::Weights;

/// Relative slack allowed when asserting `lhs <= rhs`.
pub const BOUND_TOL: f64 = 1e-9;

/// One evaluated inequality with its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `Delta_{s-1}(w)`.
    pub delta_start: f64,
    /// `Delta_t(w)`, entering with a minus sign.
    pub delta_end: f64,
    /// `sum Delta_tau(w_tau)`.
    pub delta_sum: f64,
    /// Extra term when `mu_{t+1}/pi_t` is not constant.
    pub drift: f64,
    /// `sum eta^2/2 ||g||^2`.
    pub grad_energy: f64,
    pub eta_sum: f64,
    pub s: usize,
    pub t: usize,
    pub sigma0: f64,
    pub smoothness: Option<f64>,
    /// Whether the inequality is claimed for this instance; if not the
    /// report is informational.
    pub asserted: bool,
}

impl BoundReport {
    fn empty(name: &'static str, s: usize, t: usize, sigma0: f64) -> Self {
        Self {
            name,
            lhs: 0.0,
            rhs: 0.0,
            delta_start: 0.0,
            delta_end: 0.0,
            delta_sum: 0.0,
            drift: 0.0,
            grad_energy: 0.0,
            eta_sum: 0.0,
            s,
            t,
            sigma0,
            smoothness: None,
            asserted: true,
        }
    }

    pub fn scale(&self) -> f64 {
        [self.lhs, self.rhs, self.delta_start, self.delta_end, self.delta_sum, self.drift, self.grad_energy]
            .iter()
            .fold(1.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + BOUND_TOL * self.scale()
    }

    /// A failure that counts: asserted and violated.
    pub fn violated(&self) -> bool {
        self.asserted && !self.holds()
    }
}

/// PC-type run, one-based as in the bounds. With `c_tau = mu_{tau+1}/pi_tau`,
/// `w_{tau+1} = P^{1/mu_{tau+1}}_r(w*_{tau+1}/c_tau)` and
/// `w*_{tau+1} = w*_tau - eta_tau g_tau`. Plain PC has `c_tau = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcRecord {
    /// `eta_1..eta_T`.
    pub etas: Vec<f64>,
    /// `1/pi_0..1/pi_T`.
    pub inv_pis: Vec<f64>,
    /// `c_0..c_T`.
    pub quad: Vec<f64>,
    /// `w_1..w_{T+1}`.
    pub w: Vec<Weights>,
    /// `w*_1..w*_{T+1}`.
    pub w_star: Vec<Weights>,
    /// Gradients actually used, `g_1..g_T`.
    pub grads: Vec<Weights>,
}

impl PcRecord {
    pub fn steps(&self) -> usize {
        self.etas.len()
    }

    /// Reads a PC trajectory, checking that its quantizer is the prox of `form`.
    pub fn from_trajectory(traj: &Trajectory, form: &RegularizerForm) -> Result<Self> {
        if traj.final_state.kind != OptimizerKind::Pc {
            return Err(Error::Unsupported(format!("bounds need a pc trajectory, got {}", traj.final_state.kind)));
        }
        let snaps = &traj.snapshots;
        for sn in snaps {
            let expect = form.prox(&sn.w_star, sn.sharpness);
            let scale = 1.0 + sn.w_star.norm_inf();
            if expect.max_abs_diff(&sn.w_quant)? > 1e-12 * scale {
                return Err(Error::Unsupported(format!(
                    "trajectory was not produced by the prox of {} (step {})",
                    form.name(),
                    sn.t
                )));
            }
        }
        let n = snaps.len() - 1;
        let grads = snaps[..n]
            .iter()
            .map(|s| s.grad.clone().ok_or_else(|| Error::Length(format!("snapshot {} has no gradient", s.t))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            etas: snaps[1..].iter().map(|s| s.schedule.eta).collect(),
            inv_pis: snaps.iter().map(|s| s.sharpness).collect(),
            quad: vec![1.0; n + 1],
            w: snaps.iter().map(|s| s.w_quant.clone()).collect(),
            w_star: snaps.iter().map(|s| s.w_star.clone()).collect(),
            grads,
        })
    }

    /// `mu_{t+1}/pi_t` nondecreasing, the standing assumption of the general bound.
    pub fn mu_ratio_nondecreasing(&self) -> bool {
        self.quad.windows(2).all(|c| c[1] >= c[0])
    }

    fn check_window(&self, s: usize, t: usize) -> Result<()> {
        if s == 0 || t > self.steps() || s > t + 1 {
            return Err(Error::Length(format!("window [{s}, {t}] outside 1..={}", self.steps())));
        }
        Ok(())
    }

    /// `Delta_tau(x)`.
    pub fn delta(&self, form: &RegularizerForm, tau: usize, x: &Weights) -> Result<f64> {
        bregman_delta_general(form, self.inv_pis[tau], self.quad[tau], x, &self.w[tau], &self.w_star[tau])
    }
}

/// `r_tau(w) - r_tau(w_next) - <w - w_next, w*_next>` for
/// `r_tau = r/pi + 1/2 ||.||^2`.
pub fn bregman_delta(form: &RegularizerForm, pi: f64, w: &Weights, w_next: &Weights, w_star_next: &Weights) -> Result<f64> {
    bregman_delta_general(form, 1.0 / pi, 1.0, w, w_next, w_star_next)
}

/// Same with `r_tau = inv_pi r + quad/2 ||.||^2`.
pub fn bregman_delta_general(
    form: &RegularizerForm,
    inv_pi: f64,
    quad: f64,
    w: &Weights,
    w_next: &Weights,
    w_star_next: &Weights,
) -> Result<f64> {
    let d = w.sub(w_next)?;
    let mut acc = CompensatedSum::new();
    acc.add(inv_pi * (form.value(w) - form.value(w_next)));
    acc.add(0.5 * quad * (w.norm_sq() - w_next.norm_sq()));
    acc.add(-d.dot(w_star_next)?);
    Ok(acc.value())
}

/// Termwise check of `Delta_tau(w_tau)` against step-size bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TermwiseReport {
    pub checked: usize,
    /// Against `pi_tau eta_tau^2 / (2 (sigma0 + mu_{tau+1})) ||g_tau||^2`.
    pub literal_violations: usize,
    /// Against `pi_tau / (2 (sigma0 + mu_{tau+1})) ||w*_{tau+1} - grad r_tau(w_tau)||^2`.
    pub corrected_violations: usize,
    pub max_corrected_excess: f64,
}

fn core_report(
    name: &'static str,
    rec: &PcRecord,
    form: &RegularizerForm,
    w: &Weights,
    s: usize,
    t: usize,
) -> Result<BoundReport> {
    rec.check_window(s, t)?;
    let mut rep = BoundReport::empty(name, s, t, form.strong_convexity());
    rep.asserted = true;
    rep.delta_start = rec.delta(form, s - 1, w)?;
    if s > t {
        rep.rhs = 0.0;
        rep.delta_end = rep.delta_start;
        return Ok(rep);
    }
    rep.delta_end = rec.delta(form, t, w)?;
    let rw = form.value(w);
    let wn = w.norm_sq();
    let (mut lhs, mut dsum, mut drift, mut energy, mut etas) =
        (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for tau in s..=t {
        let wt = &rec.w[tau - 1];
        let g = &rec.grads[tau - 1];
        let eta = rec.etas[tau - 1];
        lhs.add(eta * (wt.sub(w)?.dot(g)? + form.value(wt) - rw));
        dsum.add(rec.delta(form, tau, wt)?);
        let dc = rec.quad[tau] - rec.quad[tau - 1];
        if dc != 0.0 {
            drift.add(0.5 * dc * (wn - wt.norm_sq()));
        }
        energy.add(0.5 * eta * eta * g.norm_sq());
        etas.add(eta);
    }
    rep.lhs = lhs.value();
    rep.delta_sum = dsum.value();
    rep.drift = drift.value();
    rep.grad_energy = energy.value();
    rep.eta_sum = etas.value();
    rep.rhs = rep.delta_start - rep.delta_end + rep.delta_sum + rep.drift;
    Ok(rep)
}

/// `sum eta_tau [<w_tau - w, g_tau> + r(w_tau) - r(w)] <= Delta_{s-1}(w) - Delta_t(w) + sum Delta_tau(w_tau)`
/// on a plain PC record.
pub fn thm51_check(rec: &PcRecord, form: &RegularizerForm, w: &Weights, s: usize, t: usize) -> Result<BoundReport> {
    if rec.quad.iter().any(|&c| c != 1.0) {
        return Err(Error::Unsupported("record was not run with mu_t = pi_{t-1}".into()));
    }
    core_report("thm51", rec, form, w, s, t)
}

/// General-`mu` version, with the drift term on the right. Asserted when the
/// form is convex and `mu_{t+1}/pi_t` is nondecreasing.
pub fn thm_a3_check(
    rec: &PcRecord,
    form: &RegularizerForm,
    w: &Weights,
    s: usize,
    t: usize,
) -> Result<(BoundReport, TermwiseReport)> {
    let mut rep = core_report("thmA3", rec, form, w, s, t)?;
    rep.asserted = form.is_convex() && rec.mu_ratio_nondecreasing();
    let mut tw = TermwiseReport::default();
    if form.is_convex() && s <= t {
        let sigma0 = form.strong_convexity();
        for tau in s..=t {
            let wt = &rec.w[tau - 1];
            let Some(gr) = form.gradient(wt) else { break };
            let (ip, c) = (rec.inv_pis[tau], rec.quad[tau]);
            // pi_tau / (sigma0 + mu_{tau+1}) = 1 / (sigma0/pi_tau + c_tau)
            let k = 1.0 / (sigma0 * ip + c);
            let d = rec.delta(form, tau, wt)?;
            let eta = rec.etas[tau - 1];
            let literal = 0.5 * k * eta * eta * rec.grads[tau - 1].norm_sq();
            let grad_rt = gr.scale(ip).axpy(c, wt)?;
            let corrected = 0.5 * k * rec.w_star[tau].sub(&grad_rt)?.norm_sq();
            let tol = BOUND_TOL * (1.0 + d.abs().max(corrected));
            tw.checked += 1;
            if d > literal + tol {
                tw.literal_violations += 1;
            }
            if d > corrected + tol {
                tw.corrected_violations += 1;
            }
            tw.max_corrected_excess = tw.max_corrected_excess.max(d - corrected);
        }
    }
    Ok((rep, tw))
}

/// The three corollary bounds for `f = l + r`: min-iterate with the Bregman
/// terms, min-iterate with the gradient energy, and the eta-weighted average.
/// Asserted only for full-batch gradients, the last two only for convex forms.
pub fn cor52_eval(
    rec: &PcRecord,
    form: &RegularizerForm,
    problem: &Problem,
    w: &Weights,
    s: usize,
    t: usize,
) -> Result<[BoundReport; 3]> {
    if !problem.is_convex() {
        return Err(Error::Unsupported(format!("the corollary needs a convex loss, {} is not", problem.name())));
    }
    let base = thm51_check(rec, form, w, s, t)?;
    let f = |x: &Weights| -> Result<f64> { Ok(problem.loss(x)? + form.value(x)) };
    let fw = f(w)?;
    let mut full_batch = true;
    for tau in s..=t {
        let g = problem.grad(&rec.w[tau - 1], SampleSelector::Full)?;
        let scale = 1.0 + g.norm_inf();
        if g.max_abs_diff(&rec.grads[tau - 1])? > 1e-12 * scale {
            full_batch = false;
        }
    }
    let mut eq29 = BoundReport { name: "cor52_eq29", asserted: full_batch, ..base.clone() };
    let mut eq30 = BoundReport { name: "cor52_eq30", asserted: full_batch && form.is_convex(), ..base.clone() };
    let mut eq31 = BoundReport { name: "cor52_eq31", ..eq30.clone() };
    if s > t {
        for r in [&mut eq29, &mut eq30, &mut eq31] {
            r.lhs = 0.0;
            r.rhs = base.delta_start;
        }
        return Ok([eq29, eq30, eq31]);
    }
    let mut min_gap = f64::INFINITY;
    let mut avg = w.zeros_like();
    for tau in s..=t {
        let wt = &rec.w[tau - 1];
        min_gap = min_gap.min(f(wt)? - fw);
        avg = avg.axpy(rec.etas[tau - 1] / base.eta_sum, wt)?;
    }
    let h = base.eta_sum;
    eq29.lhs = min_gap;
    eq29.rhs = (base.delta_start - base.delta_end + base.delta_sum) / h;
    eq30.lhs = min_gap;
    eq30.rhs = (base.delta_start + base.grad_energy) / h;
    eq31.lhs = f(&avg)? - fw;
    eq31.rhs = eq30.rhs;
    Ok([eq29, eq30, eq31])
}

/// How `mu_t` is chosen in [`run_general_mu`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuRule {
    /// `mu_t = pi_{t-1}`: plain PC.
    Pi,
    /// `mu_t = k pi_{t-1}`.
    Scaled(f64),
    /// `mu_{t+1} = c sqrt(lambda_t)` (or `c lambda_t` if `sigma0 > 0`), with `mu_1 = mu_2`.
    Rate { sigma0: f64, c: f64 },
}

/// Full-batch PC with a general smoothing sequence:
/// `w_t = P^{1/mu_t}_r(pi_{t-1} w*_t / mu_t)`, `w*_{t+1} = w*_t - eta_t grad l(w_t)`.
pub fn run_general_mu(
    problem: &Problem,
    form: &RegularizerForm,
    schedule: &StepSchedule,
    rule: MuRule,
    w_star_1: Weights,
    steps: usize,
) -> Result<PcRecord> {
    problem.layout().check_same_layout(&w_star_1)?;
    let mut states = vec![ScheduleState::initial()];
    for _ in 0..steps.max(1) {
        let next = states.last().unwrap().advance(schedule)?;
        states.push(next);
    }
    let inv_pis: Vec<f64> = states[..=steps].iter().map(|s| s.inverse_pi()).collect();
    let quad: Vec<f64> = match rule {
        MuRule::Pi => vec![1.0; steps + 1],
        MuRule::Scaled(k) if k > 0.0 => vec![k; steps + 1],
        MuRule::Rate { sigma0, c } if c > 0.0 => {
            // mu_{tau+1} from lambda_tau, tau >= 1; mu_1 = mu_2
            let mu: Vec<f64> = (1..=steps.max(1)).map(|tau| mu_rate_for(sigma0, &states[tau], c)).collect();
            (0..=steps).map(|tau| mu[tau.saturating_sub(1)] * inv_pis[tau]).collect()
        }
        _ => return Err(Error::InvalidSchedule(format!("invalid smoothing rule {rule:?}"))),
    };
    if quad.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::InvalidSchedule("smoothing sequence must stay positive".into()));
    }
    let point = |tau: usize, ws: &Weights| -> Weights {
        // w_{tau+1} from w*_{tau+1}; gamma = 1/mu_{tau+1} = inv_pi_tau / c_tau
        let c = quad[tau];
        if c == 1.0 {
            form.prox(ws, inv_pis[tau])
        } else {
            form.prox(&ws.scale(1.0 / c), inv_pis[tau] / c)
        }
    };
    let mut rec = PcRecord {
        etas: states[1..=steps].iter().map(|s| s.eta).collect(),
        inv_pis: inv_pis.clone(),
        quad: quad.clone(),
        w: vec![point(0, &w_star_1)],
        w_star: vec![w_star_1],
        grads: Vec::with_capacity(steps),
    };
    for tau in 1..=steps {
        let g = problem.grad(&rec.w[tau - 1], SampleSelector::Full)?;
        if !g.all_finite() {
            return Err(Error::NonFiniteGradient(tau as u64));
        }
        let ws = rec.w_star[tau - 1].axpy(-rec.etas[tau - 1], &g)?;
        rec.w.push(point(tau, &ws));
        rec.w_star.push(ws);
        rec.grads.push(g);
    }
    Ok(rec)
}
