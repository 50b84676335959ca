use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxconnect::cli::{self, verify::Mutation, ExperimentConfig, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};

#[derive(Parser)]
#[command(name = "proxconnect", about = "Proximal quantizers, ProxConnect training and bound checks")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train once; writes metrics.csv, checkpoint.pckpt and final.txt.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid over sweep.kinds x sweep.rho0, averaged over sweep.seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Deliberately break a component (slope-sign).
        #[arg(long)]
        mutation: Option<String>,
    },
    /// Quantize a checkpoint with the configured quantizer.
    Quantize {
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> proxconnect::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &c.set {
        cfg.apply_override(kv)?;
    }
    if let Some(s) = c.seed {
        cfg.set("run.seed", &s.to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = match args.cmd {
        Cmd::Run { common, out } => load(&common).and_then(|cfg| cli::cmd_run(&cfg, Some(&out))).map(|o| {
            println!("{} rows, final loss {}", o.rows, o.final_loss);
            if let Some(a) = o.final_accuracy {
                println!("final hard-quantized accuracy {a}");
            }
            EXIT_OK
        }),
        Cmd::Sweep { common, out, jobs } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            load(&common).and_then(|cfg| cli::cmd_sweep(&cfg, Some(&out), jobs)).map(|rows| {
                for r in rows {
                    let acc = match (r.acc_mean, r.acc_std) {
                        (Some(m), Some(s)) => format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s),
                        _ => "-".into(),
                    };
                    println!("{:<4} rho0={:<8} runs={} acc={} loss={:.4e}", r.kind, r.rho0, r.runs, acc, r.loss_mean);
                }
                EXIT_OK
            })
        }
        Cmd::Verify { suite, mutation } => mutation
            .map(|m| m.parse::<Mutation>())
            .transpose()
            .and_then(|m| cli::cmd_verify(&suite, m))
            .map(|checks| {
                let mut failed = 0;
                for c in &checks {
                    println!("{} [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
                    failed += usize::from(!c.passed);
                }
                println!("{} checks, {} failed", checks.len(), failed);
                if failed > 0 {
                    EXIT_VERIFY
                } else {
                    EXIT_OK
                }
            }),
        Cmd::Quantize { checkpoint, common, out } => {
            load(&common).and_then(|cfg| cli::cmd_quantize(&cfg, &checkpoint, &out)).map(|_| EXIT_OK)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
