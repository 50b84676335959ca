//! Generalized conditional gradient on a smoothed dual: the averaged
//! objective gap for the two classic step rules, against the bound.

use proxconnect::gcg::{cor42_eval, run_gcg, ClosedFormConjugate, DualRegularizer};
use proxconnect::problems::Problem;
use proxconnect::schedules::{StepKind, StepSchedule};

fn main() -> proxconnect::Result<()> {
    let p = Problem::random_quadratic(4, 11, 0.1)?;
    let inst = ClosedFormConjugate::new(p.clone(), DualRegularizer::SquaredNorm { sigma: 0.5 }, None)?;
    let opt = {
        let Problem::Quadratic { h, b } = &p else { unreachable!() };
        let shifted = h + nalgebra::DMatrix::identity(4, 4) * 0.5;
        Problem::quadratic(shifted.as_slice().to_vec(), b.as_slice().to_vec())?.optimum().unwrap()
    };
    for kind in [StepKind::GcgInvT, StepKind::GcgTwoOver] {
        println!("{kind:?}");
        for t in [10, 100, 1_000, 10_000] {
            let traj = run_gcg(&inst, &StepSchedule::new(kind.clone())?, p.init_weights(3), t)?;
            let r = cor42_eval(&traj, &inst, &opt)?;
            println!("  t={t:<6} gap {:.3e}  bound {:.3e}", r.lhs, r.rhs);
        }
    }
    Ok(())
}
