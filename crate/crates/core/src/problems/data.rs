use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Row-major features with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, n_features: usize, n_classes: usize) -> Result<Self> {
        if n_features == 0 || n_classes < 2 {
            return Err(Error::InvalidProblem(format!(
                "need n_features >= 1 and n_classes >= 2, got {n_features}, {n_classes}"
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "{} feature values for {} samples of dimension {n_features}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidProblem(format!("label {l} outside 0..{n_classes}")));
        }
        Ok(Self { features, labels, n_features, n_classes })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }
}

/// Gaussian blobs with unit variance around `separation * e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub seed: u64,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_separation: f64,
}

/// Labels cycle through the classes; class `k` is centred on the scaled
/// simplex vertex `separation * e_k`, so `n_features >= n_classes` is required.
pub fn gen_blobs(spec: &SyntheticDataset) -> Result<Dataset> {
    if spec.n_samples == 0 || spec.n_features == 0 {
        return Err(Error::InvalidProblem("blob sizes must be positive".into()));
    }
    if spec.n_classes < 2 {
        return Err(Error::InvalidProblem(format!("need at least 2 classes, got {}", spec.n_classes)));
    }
    if spec.n_features < spec.n_classes {
        return Err(Error::InvalidProblem(format!(
            "simplex means need n_features >= n_classes, got {} < {}",
            spec.n_features, spec.n_classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(spec.n_samples * spec.n_features);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let k = i % spec.n_classes;
        for j in 0..spec.n_features {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mean = if j == k { spec.class_separation } else { 0.0 };
            features.push(mean + z);
        }
        labels.push(k);
    }
    Dataset::new(features, labels, spec.n_features, spec.n_classes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub header: bool,
    /// Declared class count; inferred as `max label + 1` when absent.
    pub n_classes: Option<usize>,
}

/// Comma-separated decimal features with a final integer label column.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Csv { line, column: 0, message: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() < 2 {
            return Err(Error::Csv { line, column: rec.len(), message: "need features and a label".into() });
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Csv { line, column: rec.len(), message: format!("expected {w} columns") })
            }
            _ => {}
        }
        let last = rec.len() - 1;
        for (j, cell) in rec.iter().enumerate() {
            if j == last {
                let l: usize = cell.parse().map_err(|_| Error::Csv {
                    line,
                    column: j + 1,
                    message: format!("label `{cell}` is not a nonnegative integer"),
                })?;
                if let Some(k) = schema.n_classes {
                    if l >= k {
                        return Err(Error::Csv {
                            line,
                            column: j + 1,
                            message: format!("label {l} outside declared range 0..{k}"),
                        });
                    }
                }
                labels.push(l);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Csv {
                    line,
                    column: j + 1,
                    message: format!("`{cell}` is not a number"),
                })?;
                features.push(v);
            }
        }
    }
    let Some(width) = width else {
        return Err(Error::Csv { line: 0, column: 0, message: "no data rows".into() });
    };
    let n_classes = schema.n_classes.unwrap_or_else(|| labels.iter().max().map_or(2, |m| (m + 1).max(2)));
    Dataset::new(features, labels, width - 1, n_classes)
}
