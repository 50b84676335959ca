//! Coupled step-size sequences. With `1/pi_t = 1 + sum_{tau<=t} eta_tau`,
//! `lambda_t = eta_t pi_t` and `mu_t = pi_{t-1}`, the conditional-gradient,
//! dual-averaging and ProxConnect forms of the same method coincide.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    ConstantEta(f64),
    /// `eta0 * t^(-power)` with `power` in `[0, 1/2]`.
    PolynomialEta { eta0: f64, power: f64 },
    /// `lambda_t = 1/(t+1)`, so `pi_t = 1/(t+1)` and `eta_t = 1`.
    GcgInvT,
    /// `lambda_t = 2/(t+2)`, so `pi_t = 2/((t+1)(t+2))` and `eta_t = t+1`.
    GcgTwoOver,
    /// `eta_1, eta_2, ...` given explicitly.
    Explicit(Vec<f64>),
}

/// Source of the quantizer sharpness used after `t` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SharpnessRule {
    /// `1/pi_t`, the diverging parameter of ProxConnect.
    #[default]
    InversePi,
    /// `1 + t/B`, the linear ramp used in practice.
    Linear,
    /// Always 1.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub kind: StepKind,
    pub rho0: f64,
    /// `B`, steps until the sharpness doubles under [`SharpnessRule::Linear`].
    pub horizon: f64,
    pub sharpness: SharpnessRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub t: u64,
    pub eta: f64,
    pub lambda: f64,
    pub pi: f64,
    /// `pi_{t-1}`.
    pub mu: f64,
    pub cumulative_eta: f64,
}

impl Default for ScheduleState {
    fn default() -> Self {
        Self::initial()
    }
}

impl ScheduleState {
    /// Before the first step: `pi_0 = 1`.
    pub fn initial() -> Self {
        Self { t: 0, eta: 0.0, lambda: 0.0, pi: 1.0, mu: 1.0, cumulative_eta: 0.0 }
    }

    pub fn inverse_pi(&self) -> f64 {
        1.0 + self.cumulative_eta
    }

    /// Relative defect of `1/pi_t = 1 + sum eta`.
    pub fn identity_defect(&self) -> f64 {
        (1.0 / self.pi - 1.0 - self.cumulative_eta).abs() / (1.0 + self.cumulative_eta)
    }

    /// Next state. Errors if the step size is invalid or the running sum overflows.
    pub fn advance(&self, schedule: &StepSchedule) -> Result<ScheduleState> {
        let t = self.t + 1;
        let eta = schedule.eta_at(t)?;
        let cumulative_eta = self.cumulative_eta + eta;
        if !cumulative_eta.is_finite() {
            return Err(Error::ScheduleOverflow(t));
        }
        let denom = 1.0 + cumulative_eta;
        Ok(ScheduleState { t, eta, lambda: eta / denom, pi: 1.0 / denom, mu: self.pi, cumulative_eta })
    }
}

impl StepSchedule {
    pub fn new(kind: StepKind) -> Result<Self> {
        let s = Self { kind, rho0: 1.0, horizon: 1.0, sharpness: SharpnessRule::InversePi };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(eta: f64) -> Result<Self> {
        Self::new(StepKind::ConstantEta(eta))
    }

    pub fn polynomial(eta0: f64, power: f64) -> Result<Self> {
        Self::new(StepKind::PolynomialEta { eta0, power })
    }

    pub fn with_sharpness(mut self, rule: SharpnessRule, rho0: f64, horizon: f64) -> Result<Self> {
        self.sharpness = rule;
        self.rho0 = rho0;
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        match &self.kind {
            StepKind::ConstantEta(e) if !(*e >= 0.0) || !e.is_finite() => bad(format!("eta must be >= 0, got {e}")),
            StepKind::PolynomialEta { eta0, power } if !(*eta0 >= 0.0) || !(0.0..=0.5).contains(power) => {
                bad(format!("polynomial needs eta0 >= 0 and power in [0, 1/2], got {eta0}, {power}"))
            }
            StepKind::Explicit(v) if v.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) => {
                bad("explicit step sizes must be finite and >= 0".into())
            }
            _ if !(self.rho0 >= 0.0) => bad(format!("rho0 must be >= 0, got {}", self.rho0)),
            _ if self.sharpness == SharpnessRule::Linear && !(self.horizon > 0.0) => {
                bad(format!("horizon B must be > 0, got {}", self.horizon))
            }
            _ => Ok(()),
        }
    }

    /// `eta_t` for `t >= 1`.
    pub fn eta_at(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidSchedule("step sizes start at t = 1".into()));
        }
        Ok(match &self.kind {
            StepKind::ConstantEta(e) => *e,
            StepKind::PolynomialEta { eta0, power } => eta0 * (t as f64).powf(-power),
            StepKind::GcgInvT => 1.0,
            StepKind::GcgTwoOver => (t + 1) as f64,
            StepKind::Explicit(v) => *v.get(t as usize - 1).ok_or_else(|| {
                Error::InvalidSchedule(format!("explicit schedule has {} steps, asked for step {t}", v.len()))
            })?,
        })
    }

    /// `lambda_0` of the conditional-gradient view: 1 for the two GCG kinds,
    /// 0 for step-size driven kinds.
    pub fn gcg_lambda0(&self) -> f64 {
        match self.kind {
            StepKind::GcgInvT | StepKind::GcgTwoOver => 1.0,
            _ => 0.0,
        }
    }

    /// Sharpness applied to the iterate produced after `state.t` steps.
    pub fn sharpness_at(&self, state: &ScheduleState) -> f64 {
        match self.sharpness {
            SharpnessRule::InversePi => state.inverse_pi(),
            SharpnessRule::Linear => 1.0 + state.t as f64 / self.horizon,
            SharpnessRule::Fixed => 1.0,
        }
    }

    /// `(1 + t/B) rho0`.
    pub fn rho_at(&self, t: u64) -> Result<f64> {
        rho_at(self.rho0, self.horizon, t)
    }
}

pub fn rho_at(rho0: f64, horizon: f64, t: u64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidSchedule(format!("horizon B must be > 0, got {horizon}")));
    }
    Ok((1.0 + t as f64 / horizon) * rho0)
}

/// Smoothing `mu_{t+1}`: `c sqrt(lambda_t)` without strong convexity, `c lambda_t` with it.
pub fn mu_rate_for(sigma0: f64, state: &ScheduleState, c: f64) -> f64 {
    if sigma0 > 0.0 {
        c * state.lambda
    } else {
        c * state.lambda.sqrt()
    }
}

/// `(lambda_tau, pi_tau)` for `tau = 0..=t` with `pi_0 = 1`.
pub fn gcg_sequence(schedule: &StepSchedule, t: u64) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(schedule.gcg_lambda0(), 1.0)];
    let mut s = ScheduleState::initial();
    for _ in 0..t {
        s = s.advance(schedule)?;
        out.push((s.lambda, s.pi));
    }
    Ok(out)
}

/// `H_t = sum lambda_tau / pi_tau` and the averaging weights `Lambda_{t,tau}`.
pub fn ergodic_weights(seq: &[(f64, f64)]) -> (f64, Vec<f64>) {
    let raw: Vec<f64> = seq.iter().map(|(l, p)| l / p).collect();
    let h = crate::numeric::compensated_sum(raw.iter().copied());
    let w = raw.iter().map(|r| r / h).collect();
    (h, w)
}
