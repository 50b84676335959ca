//! GCG on the smoothed dual, dual averaging and ProxConnect produce the same
//! primal iterates when the smoothing tracks `pi_{t-1}`. Scaling it breaks that.

use proxconnect::cli::verify::dual_regularizers;
use proxconnect::gcg::da_equivalence_check;
use proxconnect::problems::Problem;
use proxconnect::schedules::StepSchedule;

fn main() -> proxconnect::Result<()> {
    let p = Problem::random_quadratic(3, 5, 0.1)?;
    let sched = StepSchedule::polynomial(0.5, 0.5)?;
    let w1 = p.init_weights(3);
    for reg in dual_regularizers() {
        let eq = da_equivalence_check(&p, &reg, &sched, &w1, 100, 1.0)?;
        let off = da_equivalence_check(&p, &reg, &sched, &w1, 100, 1.5)?;
        println!(
            "{:<60} gcg/da {:.1e}  gcg/pc {:.1e}  da/pc {:.1e}   scaled smoothing {:.1e}",
            format!("{reg:?}"),
            eq.gcg_vs_da,
            eq.gcg_vs_pc,
            eq.da_vs_pc,
            off.max()
        );
    }
    Ok(())
}
