//! Train on a CSV file (features, then an integer label). Writes a small
//! two-class file first if no path is given.
//!
//! ```text
//! cargo run --example csv_dataset -- data.csv
//! ```

use std::fmt::Write;

use proxconnect::cli::{cmd_run, ExperimentConfig};

fn main() -> proxconnect::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p,
        None => {
            let mut text = String::from("x1,x2,label\n");
            for i in 0..200 {
                let t = i as f64 * 0.37;
                let label = i % 2;
                let shift = if label == 1 { 1.5 } else { -1.5 };
                writeln!(text, "{},{},{label}", shift + t.sin(), shift + (2.0 * t).cos()).unwrap();
            }
            let p = std::env::temp_dir().join("proxconnect_demo.csv");
            std::fs::write(&p, text).unwrap();
            p.to_string_lossy().into_owned()
        }
    };
    let mut cfg = ExperimentConfig::parse(
        "problem.kind = logistic\ndata.source = csv\ndata.header = true\nquantizer.grid = binary\nrun.steps = 300",
    )?;
    cfg.set("data.path", &path)?;
    let out = cmd_run(&cfg, None)?;
    println!("{path}: hard-quantized accuracy {:.3}, loss {:.4}", out.final_accuracy.unwrap_or(f64::NAN), out.final_loss);
    Ok(())
}
