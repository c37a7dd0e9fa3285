//! Pipeline configuration: one TOML file, optionally patched by
//! `ELIVAGAR_<SECTION>__<KEY>` environment variables and command-line flags.
//!
//! ```toml
//! device = "heavyhex7.json"    # relative to this file
//! seed = 7
//! n_candidates = 50
//! out = "out"
//!
//! [data]
//! source = { kind = "moons", n = 720, noise_sd = 0.1, seed = 0 }
//! normalization = "minmax"
//! train_fraction = 0.8333333333333334
//!
//! [circuit]
//! n_q = 4
//! n_params = 16
//! n_embeds = 4
//! n_meas = 1
//!
//! [run]      # any RunConfig field
//! [train]    # any TrainConfig field; epochs default to 100 here
//! ```

use std::path::{Path, PathBuf};

use elivagar::data::{DataSource, DataSpec};
use elivagar::generate::CircuitConfig;
use elivagar::model::{Dataset, DeviceModel, RunConfig};
use elivagar::seed::derive;
use elivagar::train::TrainConfig;
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "ELIVAGAR_";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub n_q: usize,
    pub n_params: usize,
    pub n_embeds: usize,
    pub n_meas: usize,
    /// Defaults to the dataset's feature count.
    pub data_dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    device: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_candidates")]
    n_candidates: usize,
    out: Option<PathBuf>,
    data: DataSpec,
    circuit: CircuitSection,
    #[serde(default)]
    run: RunConfig,
    #[serde(default)]
    train: Table,
}

fn default_candidates() -> usize {
    50
}

/// Training defaults for command-line runs.
pub fn train_preset(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 100,
        seed: derive(seed, "train", 0),
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub device_path: PathBuf,
    pub seed: u64,
    pub n_candidates: usize,
    pub out: PathBuf,
    pub data: DataSpec,
    pub circuit: CircuitSection,
    pub run: RunConfig,
    pub train: TrainConfig,
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub device: Option<PathBuf>,
}

fn bad(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Parses an override value as a TOML literal, falling back to a string.
fn env_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies `ELIVAGAR_A__B=v` as `a.b = v`. Variables without `__` are
/// command-line flags and are left to the argument parser.
pub fn apply_env(table: &mut Table, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.contains("__"))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
        let (last, parents) = path.split_last().expect("split yields at least one part");
        let mut t = &mut *table;
        for p in parents {
            let entry = t.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
            t = entry
                .as_table_mut()
                .ok_or_else(|| bad(format!("{key}: `{p}` is not a section")))?;
        }
        t.insert(last.clone(), env_value(&raw));
    }
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut table: Table = text.parse().map_err(|e| bad(format!("{}: {e}", path.display())))?;
        apply_env(&mut table, std::env::vars())?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_table(table, base, ov)
    }

    /// Builds a config from a parsed table; relative paths resolve against
    /// `base`.
    pub fn from_table(table: Table, base: &Path, ov: &Overrides) -> Result<PipelineConfig> {
        let raw: RawConfig = Value::Table(table).try_into().map_err(bad)?;
        let seed = ov.seed.unwrap_or(raw.seed);
        let user_seed = raw.train.contains_key("seed");
        let mut train_table = Table::try_from(train_preset(seed)).map_err(bad)?;
        merge(&mut train_table, raw.train);
        let mut train: TrainConfig = Value::Table(train_table).try_into().map_err(|e| bad(format!("[train] {e}")))?;
        if !user_seed {
            train.seed = derive(seed, "train", 0);
        }
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut data = raw.data;
        if let DataSource::File { path, .. } = &mut data.source {
            *path = resolve(path);
        }
        let mut run = raw.run;
        run.rng_seed = seed;
        let cfg = PipelineConfig {
            device_path: ov.device.clone().unwrap_or_else(|| resolve(&raw.device)),
            seed,
            n_candidates: raw.n_candidates,
            out: ov.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from("out")),
            data,
            circuit: raw.circuit,
            run,
            train,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.run.validate()?;
        self.train.validate()?;
        self.data.validate()?;
        if self.n_candidates < 2 {
            return Err(elivagar::Error::InvalidConfig {
                field: "n_candidates".into(),
                reason: "a search needs at least 2 candidates".into(),
            }
            .into());
        }
        Ok(())
    }

    pub fn device(&self) -> Result<DeviceModel> {
        let text = std::fs::read_to_string(&self.device_path).map_err(|e| CliError::io(&self.device_path, e))?;
        Ok(DeviceModel::from_json(&text)?)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Ok(self.data.load()?)
    }

    pub fn circuit_config(&self, ds: &Dataset) -> Result<CircuitConfig> {
        let data_dim = self.circuit.data_dim.unwrap_or(ds.dim());
        if data_dim != ds.dim() {
            return Err(elivagar::Error::DataDimension {
                needed: data_dim,
                actual: ds.dim(),
            }
            .into());
        }
        Ok(CircuitConfig {
            n_q: self.circuit.n_q,
            n_params: self.circuit.n_params,
            n_embeds: self.circuit.n_embeds,
            n_meas: self.circuit.n_meas,
            data_dim,
        })
    }
}
