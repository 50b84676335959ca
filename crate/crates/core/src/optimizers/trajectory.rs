use super::TrainState;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::schedules::ScheduleState;
use crate::weights::Weights;

/// State after `t` steps and the gradient sampled there.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: u64,
    pub w_star: Weights,
    pub w_quant: Weights,
    pub schedule: ScheduleState,
    /// Sharpness used to produce `w_quant`.
    pub sharpness: f64,
    pub grad: Option<Weights>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Initial state included, so `len = steps + 1`.
    pub snapshots: Vec<Snapshot>,
    /// Hard-quantized final weights.
    pub terminal: Weights,
    pub final_state: TrainState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Bitwise equality of every recorded float.
    pub fn bit_eq(&self, other: &Trajectory) -> bool {
        self.len() == other.len()
            && self.terminal.bit_eq(&other.terminal)
            && self.snapshots.iter().zip(&other.snapshots).all(|(a, b)| {
                a.t == b.t
                    && a.w_star.bit_eq(&b.w_star)
                    && a.w_quant.bit_eq(&b.w_quant)
                    && a.schedule == b.schedule
                    && a.grad_norm.to_bits() == b.grad_norm.to_bits()
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingWeights {
    /// Plain mean over all snapshots.
    Uniform,
    /// `sum eta_tau w_tau / sum eta_tau` over the iterates that took a step,
    /// weighted by the step size they were updated with. For the
    /// `lambda_t = 1/(t+1)` kind this is again the plain mean.
    StepSize,
}

/// Weighted average of the quantized iterates.
pub fn ergodic_average(traj: &Trajectory, weights: AveragingWeights) -> Result<Weights> {
    let snaps = &traj.snapshots;
    if snaps.is_empty() {
        return Err(Error::Length("empty trajectory".into()));
    }
    let pairs: Vec<(f64, &Weights)> = match weights {
        AveragingWeights::Uniform => snaps.iter().map(|s| (1.0, &s.w_quant)).collect(),
        AveragingWeights::StepSize => {
            if snaps.len() == 1 {
                vec![(1.0, &snaps[0].w_quant)]
            } else {
                snaps.windows(2).map(|w| (w[1].schedule.eta, &w[0].w_quant)).collect()
            }
        }
    };
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    if !(total > 0.0) {
        return Err(Error::Length("averaging weights sum to zero".into()));
    }
    let n = snaps[0].w_quant.len();
    let mut acc = vec![CompensatedSum::new(); n];
    for (a, w) in &pairs {
        for (s, v) in acc.iter_mut().zip(w.iter()) {
            s.add(a * v);
        }
    }
    let flat: Vec<f64> = acc.iter().map(|s| s.value() / total).collect();
    snaps[0].w_quant.from_flat_like(&flat)
}
