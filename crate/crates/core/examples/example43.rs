//! Fixed-smoothing BC keeps bouncing on `l = w^2/2` with a binary grid,
//! while PC (growing sharpness, decaying step) averages down to 0.

use proxconnect::diagnostics::example43_dichotomy;

fn main() -> proxconnect::Result<()> {
    for steps in [100, 1_000, 10_000] {
        let r = example43_dichotomy(0.5, 1.0, 0.1, 0.5, steps, 0.9)?;
        println!(
            "T={steps:<6} BC: min |w| {:.3}  amplitude {:.4}  sign changes {:<5}  PC: |w_bar| {:.4}  |w_T| {:.4}",
            r.bc_min_quantized, r.bc_amplitude, r.bc_sign_changes, r.pc_ergodic, r.pc_last
        );
    }
    Ok(())
}
