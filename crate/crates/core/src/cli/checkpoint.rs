use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimizers::TrainState;
use crate::schedules::ScheduleState;
use crate::weights::{WeightGroup, Weights};

const HEADER: &str = "PCKPT 1";

fn num(x: f64) -> String {
    // 17 significant digits round-trip every f64
    format!("{x:.16e}")
}

fn write_weights(out: &mut String, section: &str, w: &Weights) {
    let _ = writeln!(out, "section {section}");
    for g in &w.groups {
        let _ = writeln!(out, "group {} {}", g.name, g.values.len());
        for v in &g.values {
            out.push_str(&num(*v));
            out.push('\n');
        }
    }
}

/// Text form of a training state.
pub fn encode(state: &TrainState) -> String {
    let s = &state.schedule;
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind {}", state.kind);
    let _ = writeln!(out, "step {}", state.step);
    let _ = writeln!(out, "rng_seed {}", state.rng_seed);
    let _ = writeln!(out, "schedule.t {}", s.t);
    for (k, v) in [
        ("schedule.eta", s.eta),
        ("schedule.lambda", s.lambda),
        ("schedule.pi", s.pi),
        ("schedule.mu", s.mu),
        ("schedule.cumulative_eta", s.cumulative_eta),
    ] {
        let _ = writeln!(out, "{k} {}", num(v));
    }
    let _ = writeln!(out, "frozen {}", if state.frozen.is_empty() { "-".to_string() } else { state.frozen.join(",") });
    write_weights(&mut out, "w_star", &state.w_star);
    write_weights(&mut out, "w_quant", &state.w_quant);
    out
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        self.it.next().map(|(i, l)| {
            self.line = i + 1;
            l.trim_end()
        })
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Checkpoint(format!("line {}: {msg}", self.line))
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next().ok_or_else(|| self.err(format!("missing `{key}`")))?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} <value>`, got `{l}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.err(format!("bad value `{v}` for `{key}`")))
    }
}

/// Inverse of [`encode`]; bit-exact.
pub fn decode(text: &str) -> Result<TrainState> {
    let mut ls = Lines { it: text.lines().enumerate(), line: 0 };
    if ls.next() != Some(HEADER) {
        return Err(ls.err(format!("expected header `{HEADER}`")));
    }
    let kind = ls.field("kind")?.parse()?;
    let step = ls.parse("step")?;
    let rng_seed = ls.parse("rng_seed")?;
    let schedule = ScheduleState {
        t: ls.parse("schedule.t")?,
        eta: ls.parse("schedule.eta")?,
        lambda: ls.parse("schedule.lambda")?,
        pi: ls.parse("schedule.pi")?,
        mu: ls.parse("schedule.mu")?,
        cumulative_eta: ls.parse("schedule.cumulative_eta")?,
    };
    let frozen_raw = ls.field("frozen")?;
    let frozen = if frozen_raw == "-" { Vec::new() } else { frozen_raw.split(',').map(String::from).collect() };

    let mut sections: Vec<(String, Weights)> = Vec::new();
    while let Some(l) = ls.next() {
        if l.is_empty() {
            continue;
        }
        if let Some(name) = l.strip_prefix("section ") {
            sections.push((name.to_string(), Weights::new()));
            continue;
        }
        let Some(rest) = l.strip_prefix("group ") else {
            return Err(ls.err(format!("unexpected `{l}`")));
        };
        let (name, count) = rest.rsplit_once(' ').ok_or_else(|| ls.err("expected `group <name> <count>`"))?;
        let count: usize = count.parse().map_err(|_| ls.err(format!("bad count `{count}`")))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let v = ls.next().ok_or_else(|| ls.err(format!("group `{name}` ends early")))?;
            values.push(v.trim().parse::<f64>().map_err(|_| ls.err(format!("bad number `{v}`")))?);
        }
        let (_, w) = sections.last_mut().ok_or_else(|| ls.err("group before any section"))?;
        w.groups.push(WeightGroup { name: name.to_string(), values });
    }
    let take = |name: &str| -> Result<Weights> {
        sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| w.clone())
            .ok_or_else(|| Error::Checkpoint(format!("missing section `{name}`")))
    };
    let (w_star, w_quant) = (take("w_star")?, take("w_quant")?);
    w_star.check_same_layout(&w_quant)?;
    Ok(TrainState { w_star, w_quant, schedule, step, rng_seed, kind, frozen })
}

pub fn save(path: &Path, state: &TrainState) -> Result<()> {
    std::fs::write(path, encode(state)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<TrainState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode(&text)
}
