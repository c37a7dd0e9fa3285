//! Datasets: the two-moons generator, delimited-text ingestion,
//! feature normalization and stratified splits.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Sample};
use crate::seed::{derive, rng_from};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    None,
    /// Per-feature affine map onto `[0, π]`.
    #[default]
    MinMax,
    /// Per-feature zero mean, unit variance.
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Moons {
        n: usize,
        noise_sd: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
        label_column: String,
        #[serde(default = "default_delimiter")]
        delimiter: char,
    },
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub source: DataSource,
    #[serde(default)]
    pub normalization: Normalization,
    /// Fraction of each class that goes to the training split; the rest is
    /// the test split.
    pub train_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
}

impl DataSpec {
    /// 600 training and 120 test points of the moons task.
    pub fn moons_default(seed: u64) -> DataSpec {
        DataSpec {
            source: DataSource::Moons {
                n: 720,
                noise_sd: 0.1,
                seed,
            },
            normalization: Normalization::MinMax,
            train_fraction: 600.0 / 720.0,
            split_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie strictly between 0 and 1"));
        }
        if let DataSource::Moons { n, noise_sd, .. } = self.source {
            if n % 2 != 0 || n < 4 {
                return Err(Error::config("n", "moons needs an even sample count of at least 4"));
            }
            if !(noise_sd >= 0.0) {
                return Err(Error::config("noise_sd", "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Builds the dataset: read or generate, normalize, then split.
    pub fn load(&self) -> Result<Dataset> {
        self.validate()?;
        let mut samples = match &self.source {
            DataSource::Moons { n, noise_sd, seed } => make_moons(*n, *noise_sd, *seed)?,
            DataSource::File {
                path,
                label_column,
                delimiter,
            } => read_delimited(path, label_column, *delimiter)?,
        };
        normalize(&mut samples, self.normalization);
        stratified_split(samples, self.train_fraction, self.split_seed)
    }
}

/// Two interleaved half circles, `n/2` points each, on a uniform grid of
/// `t ∈ [0, π]`: class 0 at `(cos t, sin t)`, class 1 at
/// `(1 − cos t, 0.5 − sin t)`, plus Gaussian noise of deviation `noise_sd`.
pub fn make_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Vec<Sample>> {
    if n % 2 != 0 {
        return Err(Error::config("n", format!("moons needs an even sample count, got {n}")));
    }
    let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::config("noise_sd", e.to_string()))?;
    let mut rng = rng_from(derive(seed, "moons", 0));
    let half = n / 2;
    let t = |i: usize| if half > 1 { PI * i as f64 / (half - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n);
    for y in 0..2 {
        for i in 0..half {
            let (a, b) = if y == 0 {
                (t(i).cos(), t(i).sin())
            } else {
                (1.0 - t(i).cos(), 0.5 - t(i).sin())
            };
            let x = vec![a + normal.sample(&mut rng), b + normal.sample(&mut rng)];
            out.push(Sample { x, y });
        }
    }
    Ok(out)
}

/// Normalizes features in place. Constant features map to 0.
pub fn normalize(samples: &mut [Sample], how: Normalization) {
    let Some(dim) = samples.first().map(|s| s.x.len()) else {
        return;
    };
    for f in 0..dim {
        let col = samples.iter().map(|s| s.x[f]);
        match how {
            Normalization::None => {}
            Normalization::MinMax => {
                let lo = col.clone().fold(f64::INFINITY, f64::min);
                let hi = col.fold(f64::NEG_INFINITY, f64::max);
                for s in samples.iter_mut() {
                    s.x[f] = if hi > lo {
                        // Pin the endpoints so they land exactly on 0 and π.
                        if s.x[f] == hi {
                            PI
                        } else {
                            (s.x[f] - lo) / (hi - lo) * PI
                        }
                    } else {
                        0.0
                    };
                }
            }
            Normalization::ZScore => {
                let n = samples.len() as f64;
                let mean = col.clone().sum::<f64>() / n;
                let sd = (col.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                for s in samples.iter_mut() {
                    s.x[f] = if sd > 0.0 { (s.x[f] - mean) / sd } else { 0.0 };
                }
            }
        }
    }
}

/// Splits each class separately: `round(train_fraction · n_class)` samples
/// (at least one, leaving at least one) go to training, after a seeded
/// shuffle. Classes are `0..=max label`; every class must appear twice.
pub fn stratified_split(samples: Vec<Sample>, train_fraction: f64, seed: u64) -> Result<Dataset> {
    let n_classes = samples.iter().map(|s| s.y + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<Sample>> = vec![Vec::new(); n_classes];
    for s in samples {
        by_class[s.y].push(s);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "class {class} has {} samples; each class needs at least 2 to split",
                members.len()
            )));
        }
        members.shuffle(&mut rng_from(derive(seed, "split", class as u64)));
        let k = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        test.extend(members.split_off(k));
        train.extend(members);
    }
    Dataset::new(train, test, n_classes)
}

/// Reads a delimited table with a header row. Every column except
/// `label_column` is a numeric feature; labels are integers forming
/// `0..n_classes` with every class present.
pub fn read_delimited(path: &Path, label_column: &str, delimiter: char) -> Result<Vec<Sample>> {
    let shown = path.display().to_string();
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: shown.clone(),
        line,
        reason,
    };
    if !delimiter.is_ascii() {
        return Err(Error::config("delimiter", "must be a single ASCII character"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{shown}: {e}")))?;
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| parse_err(1, format!("no column named `{label_column}`")))?;
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("row has {} fields, header has {}", rec.len(), header.len()),
            ));
        }
        let mut x = Vec::with_capacity(header.len() - 1);
        let mut y = 0;
        for (i, cell) in rec.iter().enumerate() {
            if i == label_idx {
                y = cell
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("label `{cell}` is not a non-negative integer")))?;
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(line, format!("`{cell}` in column `{}` is not a number", &header[i])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite value in column `{}`", &header[i])));
                }
                x.push(v);
            }
        }
        samples.push(Sample { x, y });
    }
    if samples.is_empty() {
        return Err(Error::InvalidDataset(format!("{shown}: no data rows")));
    }
    let n_classes = samples.iter().map(|s| s.y + 1).max().unwrap_or(0);
    let mut seen = vec![false; n_classes];
    samples.iter().for_each(|s| seen[s.y] = true);
    if let Some(missing) = seen.iter().position(|&b| !b) {
        return Err(Error::InvalidDataset(format!(
            "{shown}: labels must cover 0..{n_classes}, class {missing} never appears"
        )));
    }
    Ok(samples)
}
