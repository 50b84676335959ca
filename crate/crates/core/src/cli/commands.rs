use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::checkpoint;
use super::config::ExperimentConfig;
use super::metrics::MetricsWriter;
use super::verify::{resolve_suites, run_suite, Check, Mutation};
use crate::error::{Error, Result};
use crate::optimizers::{OptimizerKind, Runner, StepContext, TrainState};
use crate::weights::Weights;

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub final_state: TrainState,
    /// Hard-quantized final weights.
    pub terminal: Weights,
    pub final_loss: f64,
    pub final_accuracy: Option<f64>,
    pub rows: usize,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Runs the configured experiment. With `out` set, writes `metrics.csv`,
/// `checkpoint.pckpt` and `final.txt` there. On divergence the rows written
/// so far stay on disk and the error is returned.
pub fn cmd_run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let problem = cfg.problem()?;
    let quantizer = cfg.quantizer(&problem)?;
    let schedule = cfg.schedule()?;
    let rc = cfg.run_config()?;
    let ctx = StepContext::new(&problem, quantizer.as_ref(), &schedule).with_batch_size(cfg.batch_size()?);
    let mut runner = match cfg.get("run.resume") {
        Some(path) => Runner::resume(ctx, rc.clone(), checkpoint::load(Path::new(path))?)?,
        None => Runner::new(ctx, rc.clone(), problem.init_weights(rc.seed))?,
    };
    let sink: Box<dyn Write> = match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let p = dir.join("metrics.csv");
            Box::new(BufWriter::new(File::create(&p).map_err(|e| io_err(&p, e))?))
        }
        None => Box::new(std::io::sink()),
    };
    let mut metrics = MetricsWriter::new(sink)?;
    let mut rows = 0;
    loop {
        let last = runner.done();
        match runner.next_snapshot() {
            Ok(snap) => {
                if out.is_some() {
                    metrics.row(&problem, &snap)?;
                }
                rows += 1;
            }
            Err(e) => {
                metrics.flush()?;
                return Err(e);
            }
        }
        if last {
            break;
        }
    }
    metrics.flush()?;
    let terminal = runner.terminal()?;
    let final_loss = problem.loss(&terminal)?;
    let final_accuracy = problem.accuracy(&terminal)?;
    let final_state = runner.state().clone();
    if let Some(dir) = out {
        checkpoint::save(&dir.join("checkpoint.pckpt"), &final_state)?;
        let acc = final_accuracy.map(|a| a.to_string()).unwrap_or_default();
        let p = dir.join("final.txt");
        fs::write(&p, format!("final_loss_hard = {final_loss}\nfinal_accuracy_hard = {acc}\n")).map_err(|e| io_err(&p, e))?;
    }
    Ok(RunOutcome { final_state, terminal, final_loss, final_accuracy, rows })
}

/// One aggregated sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: OptimizerKind,
    pub rho0: f64,
    pub runs: usize,
    pub acc_mean: Option<f64>,
    pub acc_std: Option<f64>,
    pub loss_mean: f64,
    pub loss_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Grid over `sweep.kinds` x `sweep.rho0`, each cell averaged over `sweep.seeds`.
/// Cells run on up to `jobs` threads; results do not depend on `jobs`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: Option<&Path>, jobs: usize) -> Result<Vec<SweepRow>> {
    if !cfg.is_set("sweep.rho0") && !cfg.is_set("sweep.kinds") && !cfg.is_set("sweep.seeds") {
        return Err(Error::Config { key: "sweep".into(), message: "sweep grid is empty; set sweep.rho0, sweep.kinds or sweep.seeds".into() });
    }
    let empty = |key: &str| Error::Config { key: key.into(), message: "empty list".into() };
    let rhos: Vec<f64> = match cfg.list("sweep.rho0")? {
        Some(v) if v.is_empty() => return Err(empty("sweep.rho0")),
        Some(v) => v,
        None => vec![cfg.parse_key("quantizer.rho0")?],
    };
    let kinds: Vec<OptimizerKind> = match cfg.list::<String>("sweep.kinds")? {
        Some(v) if v.is_empty() => return Err(empty("sweep.kinds")),
        Some(v) => v.iter().map(|k| k.parse()).collect::<Result<_>>()?,
        None => vec![cfg.kind()?],
    };
    let seeds: Vec<u64> = match cfg.list("sweep.seeds")? {
        Some(v) if v.is_empty() => return Err(empty("sweep.seeds")),
        Some(v) => v,
        None => vec![cfg.parse_key("run.seed")?],
    };
    let mut jobs_list = Vec::new();
    for &kind in &kinds {
        for &rho in &rhos {
            for &seed in &seeds {
                jobs_list.push((kind, rho, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunOutcome>> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(kind, rho, seed)| {
                let mut c = cfg.clone();
                c.set("optimizer.kind", kind.name())?;
                c.set("quantizer.rho0", &rho.to_string())?;
                c.set("run.seed", &seed.to_string())?;
                let dir: Option<PathBuf> = out.map(|d| d.join(format!("{kind}_rho{rho}_seed{seed}")));
                cmd_run(&c, dir.as_deref())
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, chunk) in results.chunks(seeds.len()).enumerate() {
        let (kind, rho0, _) = jobs_list[i * seeds.len()];
        let accs: Option<Vec<f64>> = chunk.iter().map(|r| r.final_accuracy).collect();
        let losses: Vec<f64> = chunk.iter().map(|r| r.final_loss).collect();
        let (loss_mean, loss_std) = mean_std(&losses);
        let acc = accs.map(|a| mean_std(&a));
        rows.push(SweepRow {
            kind,
            rho0,
            runs: chunk.len(),
            acc_mean: acc.map(|a| a.0),
            acc_std: acc.map(|a| a.1),
            loss_mean,
            loss_std,
        });
    }
    if let Some(dir) = out {
        let p = dir.join("summary.csv");
        let mut text = String::from("kind,rho0,runs,acc_mean,acc_std,loss_mean,loss_std\n");
        for r in &rows {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.kind,
                r.rho0,
                r.runs,
                opt(r.acc_mean),
                opt(r.acc_std),
                r.loss_mean,
                r.loss_std
            ));
        }
        fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    }
    Ok(rows)
}

/// Runs the selected suites; the caller decides the exit status.
pub fn cmd_verify(selector: &str, mutation: Option<Mutation>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for s in resolve_suites(selector)? {
        out.extend(run_suite(s, mutation)?);
    }
    Ok(out)
}

/// Applies the configured quantizer at `quantize.sharpness` to both weight
/// sets of a checkpoint; `inf` means hard quantization.
pub fn cmd_quantize(cfg: &ExperimentConfig, input: &Path, output: &Path) -> Result<TrainState> {
    let mut state = checkpoint::load(input)?;
    let problem = cfg.problem()?;
    let q = cfg.quantizer(&problem)?;
    let s: f64 = cfg.parse_key("quantize.sharpness")?;
    if !(s > 0.0) {
        return Err(Error::Config { key: "quantize.sharpness".into(), message: format!("must be > 0, got {s}") });
    }
    let apply = |w: &Weights| if s.is_infinite() { q.hard_quantize(w) } else { q.quantize(w, s, state.step) };
    let (ws, wq) = (apply(&state.w_star)?, apply(&state.w_quant)?);
    state.w_star = ws;
    state.w_quant = wq;
    checkpoint::save(output, &state)?;
    Ok(state)
}
