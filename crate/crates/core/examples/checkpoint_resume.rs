//! Stop a run halfway, resume it from the checkpoint, and compare with the
//! uninterrupted run byte for byte.

use std::fs;

use proxconnect::cli::{cmd_run, ExperimentConfig};

fn main() -> proxconnect::Result<()> {
    let dir = std::env::temp_dir().join("proxconnect_resume_demo");
    let base = "problem.kind = logistic\ndata.samples = 120\nquantizer.grid = binary\nrun.batch_size = 16";
    let full = ExperimentConfig::parse(&format!("{base}\nrun.steps = 200"))?;
    cmd_run(&full, Some(&dir.join("full")))?;

    let half = ExperimentConfig::parse(&format!("{base}\nrun.steps = 100"))?;
    cmd_run(&half, Some(&dir.join("half")))?;
    let mut rest = full.clone();
    rest.set("run.resume", dir.join("half/checkpoint.pckpt").to_str().unwrap())?;
    cmd_run(&rest, Some(&dir.join("rest")))?;

    let a = fs::read(dir.join("full/checkpoint.pckpt")).unwrap();
    let b = fs::read(dir.join("rest/checkpoint.pckpt")).unwrap();
    println!("checkpoints identical: {}", a == b);
    println!("{}", String::from_utf8_lossy(&a).lines().take(12).collect::<Vec<_>>().join("\n"));
    Ok(())
}
