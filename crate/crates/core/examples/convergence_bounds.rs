//! Evaluates the PC bounds along a run: the telescoped bound, the three
//! corollary forms, and the general-smoothing variant with its termwise check.
//!
//! ```text
//! cargo run --example convergence_bounds -- 500
//! ```

use proxconnect::diagnostics::{cor52_eval, run_general_mu, thm51_check, thm_a3_check, MuRule, PcRecord, RegularizerForm};
use proxconnect::optimizers::{run_from, OptimizerKind, RunConfig, StepContext};
use proxconnect::problems::Problem;
use proxconnect::quantizers::QuantizationGrid;
use proxconnect::schedules::StepSchedule;

fn main() -> proxconnect::Result<()> {
    let steps: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let p = Problem::random_quadratic(4, 1, 0.1)?;
    let w = p.optimum().expect("quadratic");
    let sched = StepSchedule::polynomial(0.2, 0.5)?;
    for form in [
        RegularizerForm::SquaredNorm { sigma: 0.5 },
        RegularizerForm::ScaledSqDist { grid: QuantizationGrid::binary(), weight: 1.0 },
    ] {
        let ctx = StepContext::new(&p, &form, &sched);
        let traj = run_from(ctx, RunConfig::new(OptimizerKind::Pc, steps as u64, 0), p.init_weights(2))?;
        let rec = PcRecord::from_trajectory(&traj, &form)?;
        let mut reports = vec![thm51_check(&rec, &form, &w, 1, steps)?];
        reports.extend(cor52_eval(&rec, &form, &p, &w, 1, steps)?);
        for r in reports {
            println!(
                "{:<14} {:<12} lhs {:>12.6e}  rhs {:>12.6e}  {}",
                form.name(),
                r.name,
                r.lhs,
                r.rhs,
                if !r.asserted { "reported" } else if r.holds() { "holds" } else { "VIOLATED" }
            );
        }
    }
    let f = RegularizerForm::SquaredNorm { sigma: 0.5 };
    let rec = run_general_mu(&p, &f, &sched, MuRule::Rate { sigma0: 0.5, c: 1.0 }, p.init_weights(2), steps)?;
    let (r, tw) = thm_a3_check(&rec, &f, &w, 1, steps)?;
    println!("general mu     lhs {:.6e}  rhs {:.6e}  drift {:.3e}", r.lhs, r.rhs, r.drift);
    println!(
        "termwise       {} terms, corrected form violated {}, step-size form violated {}",
        tw.checked, tw.corrected_violations, tw.literal_violations
    );
    Ok(())
}
