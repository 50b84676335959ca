use std::collections::BTreeMap;
use std::path::Path;

use crate::diagnostics::RegularizerForm;
use crate::error::{Error, Result};
use crate::optimizers::{OptimizerKind, RunConfig};
use crate::problems::{gen_blobs, load_csv, Activation, CsvSchema, Problem, SyntheticDataset};
use crate::quantizers::{PiecewiseLinearQuantizer, QuantizationGrid, Quantizer, QuantizerSpec};
use crate::schedules::{SharpnessRule, StepKind, StepSchedule};

/// Keys the runner understands, with their defaults (`None` = no default).
const KEYS: &[(&str, Option<&str>)] = &[
    ("problem.kind", Some("quadratic")),
    ("problem.dim", Some("4")),
    ("problem.seed", Some("0")),
    ("problem.floor", Some("0.1")),
    ("problem.l2", Some("0.01")),
    ("data.source", Some("blobs")),
    ("data.path", None),
    ("data.header", Some("true")),
    ("data.classes", None),
    ("data.samples", Some("300")),
    ("data.features", Some("4")),
    ("data.separation", Some("3")),
    ("data.seed", Some("0")),
    ("mlp.hidden", Some("16")),
    ("mlp.activation", Some("tanh")),
    ("optimizer.kind", Some("pc")),
    ("quantizer.kind", Some("plq")),
    ("quantizer.grid", Some("binary")),
    ("quantizer.rho0", Some("0.1")),
    ("quantizer.varrho0", Some("0")),
    ("quantizer.clip", Some("true")),
    ("quantizer.mu", Some("1")),
    ("quantizer.epsilon", Some("0.5")),
    ("quantizer.sigma", Some("1")),
    ("quantizer.weight", Some("1")),
    ("quantizer.groups", Some("weights")),
    ("schedule.kind", Some("constant")),
    ("schedule.eta0", Some("0.1")),
    ("schedule.power", Some("0.5")),
    ("schedule.sharpness", Some("inverse_pi")),
    ("schedule.horizon", Some("100")),
    ("run.steps", Some("100")),
    ("run.seed", Some("0")),
    ("run.batch_size", Some("0")),
    ("run.hard_quantize_at", None),
    ("run.divergence_bound", Some("1e6")),
    ("run.resume", None),
    ("sweep.rho0", None),
    ("sweep.seeds", None),
    ("sweep.kinds", None),
    ("quantize.sharpness", Some("inf")),
];

/// Flat `key = value` configuration with dotted keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

fn cfg_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), message: message.into() }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(&format!("line {}", i + 1), format!("expected `key = value`, got `{line}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(cfg_err(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| cfg_err(kv, "override must look like key=value"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .or_else(|| KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d))
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn req(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| cfg_err(key, "missing"))
    }

    pub fn parse_key<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.req(key)?;
        v.parse().map_err(|_| cfg_err(key, format!("cannot parse `{v}`")))
    }

    /// Comma-separated list; `None` when the key is unset.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| cfg_err(key, format!("cannot parse list item `{s}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn bool_key(&self, key: &str) -> Result<bool> {
        match self.req(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(cfg_err(key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn keyed<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config { .. } => e,
            other => cfg_err(key, other.to_string()),
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let kind = self.req("problem.kind")?;
        let p = match kind {
            "quadratic" => Problem::random_quadratic(
                self.parse_key("problem.dim")?,
                self.parse_key("problem.seed")?,
                self.parse_key("problem.floor")?,
            ),
            "half_square" => Ok(Problem::half_square()),
            "logistic" => Problem::logistic(self.dataset()?, self.parse_key("problem.l2")?),
            "mlp" => {
                let hidden: Vec<usize> = self.list("mlp.hidden")?.unwrap_or_default();
                let act = match self.req("mlp.activation")? {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    v => return Err(cfg_err("mlp.activation", format!("expected tanh or relu, got `{v}`"))),
                };
                Problem::mlp(&hidden, act, self.dataset()?)
            }
            v => return Err(cfg_err("problem.kind", format!("unknown problem `{v}` (quadratic, half_square, logistic, mlp)"))),
        };
        self.keyed("problem.kind", p)
    }

    pub fn dataset(&self) -> Result<crate::problems::Dataset> {
        match self.req("data.source")? {
            "blobs" => {
                let spec = SyntheticDataset {
                    seed: self.parse_key("data.seed")?,
                    n_samples: self.parse_key("data.samples")?,
                    n_features: self.parse_key("data.features")?,
                    n_classes: self.get("data.classes").map(|_| self.parse_key("data.classes")).transpose()?.unwrap_or(3),
                    class_separation: self.parse_key("data.separation")?,
                };
                self.keyed("data.source", gen_blobs(&spec))
            }
            "csv" => {
                let path = self.req("data.path")?;
                let schema = CsvSchema {
                    header: self.bool_key("data.header")?,
                    n_classes: self.get("data.classes").map(|_| self.parse_key("data.classes")).transpose()?,
                };
                self.keyed("data.path", load_csv(Path::new(path), &schema))
            }
            v => Err(cfg_err("data.source", format!("expected blobs or csv, got `{v}`"))),
        }
    }

    pub fn grid(&self) -> Result<QuantizationGrid> {
        let g = match self.req("quantizer.grid")? {
            "binary" => Ok(QuantizationGrid::binary()),
            "ternary" => Ok(QuantizationGrid::ternary()),
            "quaternary" => Ok(QuantizationGrid::quaternary()),
            _ => {
                let levels: Vec<f64> = self.list("quantizer.grid")?.unwrap_or_default();
                QuantizationGrid::new(&levels)
            }
        };
        self.keyed("quantizer.grid", g)
    }

    fn spec_for_groups(&self, inner: QuantizerSpec, problem: &Problem) -> Result<QuantizerSpec> {
        let layout = problem.layout();
        let names = layout.names();
        let sel = self.req("quantizer.groups")?;
        // `weights` picks the weight matrices W1, W2, ... and leaves biases alone
        let matrices: Vec<String> = names.iter().filter(|n| n.starts_with('W')).map(|n| n.to_string()).collect();
        if sel == "all" || (sel == "weights" && matrices.is_empty()) {
            return Ok(inner);
        }
        let chosen: Vec<String> = if sel == "weights" { matrices } else { self.list("quantizer.groups")?.unwrap_or_default() };
        if let Some(bad) = chosen.iter().find(|c| !names.contains(&c.as_str())) {
            return Err(cfg_err("quantizer.groups", format!("no group `{bad}` (have {})", names.join(", "))));
        }
        let parts = names
            .iter()
            .map(|n| (*n, if chosen.iter().any(|c| c == n) { inner.clone() } else { QuantizerSpec::Identity }))
            .collect();
        self.keyed("quantizer.groups", QuantizerSpec::per_group(parts))
    }

    pub fn quantizer(&self, problem: &Problem) -> Result<Box<dyn Quantizer>> {
        let kind = self.req("quantizer.kind")?;
        let spec = match kind {
            "identity" => QuantizerSpec::Identity,
            "projector" => QuantizerSpec::Projector(self.grid()?),
            "plq" => {
                let q = PiecewiseLinearQuantizer::new(
                    self.grid()?,
                    self.parse_key("quantizer.rho0")?,
                    self.parse_key("quantizer.varrho0")?,
                );
                let q = self.keyed("quantizer.rho0", q)?;
                QuantizerSpec::PiecewiseLinear(if self.bool_key("quantizer.clip")? { q } else { q.unclamped() })
            }
            "binary_relax" => self.keyed("quantizer.mu", QuantizerSpec::binary_relax(self.grid()?, self.parse_key("quantizer.mu")?))?,
            "example43" => self.keyed(
                "quantizer.epsilon",
                QuantizerSpec::example43(self.parse_key("quantizer.epsilon")?, self.parse_key("quantizer.mu")?),
            )?,
            "squared_norm" => return Ok(Box::new(RegularizerForm::SquaredNorm { sigma: self.parse_key("quantizer.sigma")? })),
            "scaled_sq_dist" => {
                return Ok(Box::new(RegularizerForm::ScaledSqDist {
                    grid: self.grid()?,
                    weight: self.parse_key("quantizer.weight")?,
                }))
            }
            "dist" => return Ok(Box::new(RegularizerForm::Dist { grid: self.grid()? })),
            v => {
                return Err(cfg_err(
                    "quantizer.kind",
                    format!("unknown quantizer `{v}` (identity, projector, plq, binary_relax, example43, squared_norm, scaled_sq_dist, dist)"),
                ))
            }
        };
        Ok(Box::new(self.spec_for_groups(spec, problem)?))
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        let eta0: f64 = self.parse_key("schedule.eta0")?;
        let kind = match self.req("schedule.kind")? {
            "constant" => StepKind::ConstantEta(eta0),
            "polynomial" => StepKind::PolynomialEta { eta0, power: self.parse_key("schedule.power")? },
            "gcg_inv_t" => StepKind::GcgInvT,
            "gcg_two_over" => StepKind::GcgTwoOver,
            v => {
                return Err(cfg_err(
                    "schedule.kind",
                    format!("unknown schedule `{v}` (constant, polynomial, gcg_inv_t, gcg_two_over)"),
                ))
            }
        };
        let rule = match self.req("schedule.sharpness")? {
            "inverse_pi" => SharpnessRule::InversePi,
            "linear" => SharpnessRule::Linear,
            "fixed" => SharpnessRule::Fixed,
            v => return Err(cfg_err("schedule.sharpness", format!("expected inverse_pi, linear or fixed, got `{v}`"))),
        };
        let s = StepSchedule::new(kind).and_then(|s| {
            s.with_sharpness(rule, self.parse_key("quantizer.rho0").unwrap_or(0.0), self.parse_key("schedule.horizon")?)
        });
        self.keyed("schedule.kind", s)
    }

    pub fn kind(&self) -> Result<OptimizerKind> {
        self.keyed("optimizer.kind", self.req("optimizer.kind")?.parse())
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut rc = RunConfig::new(self.kind()?, self.parse_key("run.steps")?, self.parse_key("run.seed")?);
        rc.divergence_bound = self.parse_key("run.divergence_bound")?;
        if self.get("run.hard_quantize_at").is_some() {
            rc.hard_quantize_at = Some(self.parse_key("run.hard_quantize_at")?);
        }
        Ok(rc)
    }

    pub fn batch_size(&self) -> Result<Option<usize>> {
        let b: usize = self.parse_key("run.batch_size")?;
        Ok((b > 0).then_some(b))
    }
}
