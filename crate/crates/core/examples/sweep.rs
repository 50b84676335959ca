//! rho0 x seeds grid for PC and PTQ, mean and sample std of accuracy per cell.

use proxconnect::cli::{cmd_sweep, ExperimentConfig};

fn main() -> proxconnect::Result<()> {
    let cfg = ExperimentConfig::parse(
        "problem.kind = mlp
data.samples = 300
mlp.hidden = 8
run.steps = 400
run.batch_size = 32
quantizer.grid = binary
sweep.kinds = pc, ptq
sweep.rho0 = 0.01, 0.05, 0.2
sweep.seeds = 1, 2, 3",
    )?;
    for r in cmd_sweep(&cfg, None, 1)? {
        println!(
            "{:<4} rho0={:<5} runs={} acc {:.3} +- {:.3}",
            r.kind,
            r.rho0,
            r.runs,
            r.acc_mean.unwrap_or(f64::NAN),
            r.acc_std.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
