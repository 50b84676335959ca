use std::io::Write;

use crate::error::Result;
use crate::optimizers::Snapshot;
use crate::problems::Problem;

pub const METRICS_COLUMNS: [&str; 9] = [
    "t",
    "eta",
    "lambda",
    "pi",
    "sharpness",
    "loss_continuous",
    "loss_quantized",
    "grad_norm",
    "accuracy_quantized",
];

/// One CSV row per snapshot; floats in shortest round-trip form.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{}", METRICS_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, problem: &Problem, snap: &Snapshot) -> Result<()> {
        let s = &snap.schedule;
        let acc = problem.accuracy(&snap.w_quant)?.map(|a| a.to_string()).unwrap_or_default();
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{}",
            snap.t,
            s.eta,
            s.lambda,
            s.pi,
            snap.sharpness,
            problem.loss(&snap.w_star)?,
            problem.loss(&snap.w_quant)?,
            snap.grad_norm,
            acc
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
