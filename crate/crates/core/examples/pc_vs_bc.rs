//! All five training schemes on Gaussian blobs with a small MLP, ternary grid.
//! Final accuracy is measured after hard quantization.

use proxconnect::cli::{cmd_run, ExperimentConfig};

fn main() -> proxconnect::Result<()> {
    let base = "problem.kind = mlp
data.samples = 600
data.features = 8
data.classes = 4
data.separation = 2.5
mlp.hidden = 16
schedule.eta0 = 0.05
run.steps = 1500
run.batch_size = 32
quantizer.grid = ternary
quantizer.rho0 = 0.02
quantizer.varrho0 = 0.02
schedule.sharpness = linear
schedule.horizon = 200";
    for kind in ["bc", "pc", "rpc", "pq", "ptq"] {
        let mut accs = Vec::new();
        for seed in 1..=3 {
            let mut cfg = ExperimentConfig::parse(base)?;
            cfg.set("optimizer.kind", kind)?;
            cfg.set("run.seed", &seed.to_string())?;
            cfg.set("data.seed", &seed.to_string())?;
            accs.push(cmd_run(&cfg, None)?.final_accuracy.unwrap_or(f64::NAN));
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("{kind:<4} {}  mean {mean:.3}", accs.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
