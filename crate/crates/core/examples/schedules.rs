//! Step sizes, the derived `lambda_t`, `pi_t` and the sharpness fed to the
//! quantizer, for each schedule kind.

use proxconnect::schedules::{ScheduleState, SharpnessRule, StepKind, StepSchedule};

fn main() -> proxconnect::Result<()> {
    let kinds = [
        ("constant 0.1", StepSchedule::constant(0.1)?),
        ("0.5/sqrt(t)", StepSchedule::polynomial(0.5, 0.5)?),
        ("gcg 1/(t+1)", StepSchedule::new(StepKind::GcgInvT)?),
        ("gcg 2/(t+2)", StepSchedule::new(StepKind::GcgTwoOver)?),
        ("linear rho", StepSchedule::constant(0.1)?.with_sharpness(SharpnessRule::Linear, 0.05, 100.0)?),
    ];
    for (name, s) in kinds {
        println!("{name}");
        let mut st = ScheduleState::initial();
        for t in 1..=1000u64 {
            st = st.advance(&s)?;
            if [1, 2, 10, 100, 1000].contains(&t) {
                println!(
                    "  t={t:<5} eta {:<10.4e} lambda {:<10.4e} pi {:<10.4e} sharpness {:<10.4e} defect {:.1e}",
                    st.eta,
                    st.lambda,
                    st.pi,
                    s.sharpness_at(&st),
                    st.identity_defect()
                );
            }
        }
    }
    Ok(())
}
