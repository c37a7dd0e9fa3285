use std::path::{Path, PathBuf};

use elivagar::cnr::{reject, Rejection};
use elivagar::model::{validate_circuit, Circuit, Dataset, DeviceModel};
use elivagar::search::{
    cnr_stage, generation_seed, repcap_stage, run_search, supercircuit_cost, training_executions,
};
use elivagar::generate::generate_candidates;
use elivagar::train::{evaluate, train, Backend, TrainConfig};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::output::{self, Budget, CnrFile, DatasetInfo, RunReport, Trained};

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn or_default(p: Option<PathBuf>, cfg: &PipelineConfig, name: &str) -> PathBuf {
    p.unwrap_or_else(|| cfg.out.join(name))
}

fn read_circuits(path: &Path, dev: &DeviceModel) -> Result<Vec<Circuit>> {
    let circuits: Vec<Circuit> = output::read_json(path)?;
    for (i, c) in circuits.iter().enumerate() {
        if let Some(v) = validate_circuit(c, dev).first() {
            return Err(CliError::Config(format!("{}: circuit {i}: {v}", path.display())));
        }
    }
    Ok(circuits)
}

pub fn generate(cfg: &PipelineConfig, n: Option<usize>) -> Result<()> {
    let dev = cfg.device()?;
    let ds = cfg.dataset()?;
    let conf = cfg.circuit_config(&ds)?;
    let n = n.unwrap_or(cfg.n_candidates);
    let circuits = generate_candidates(&dev, &conf, &cfg.run, n, generation_seed(cfg.seed))?;
    let path = out_dir(cfg)?.join("candidates.json");
    output::write_json(&path, &circuits)?;
    println!("wrote {} candidates to {}", circuits.len(), path.display());
    Ok(())
}

pub fn cnr(cfg: &PipelineConfig, circuits: Option<PathBuf>) -> Result<()> {
    let dev = cfg.device()?;
    let circuits = read_circuits(&or_default(circuits, cfg, "candidates.json"), &dev)?;
    let results = cnr_stage(&circuits, &dev, &cfg.run, cfg.seed)?;
    let Rejection { kept, rejected } = reject(&results, &cfg.run);
    let dir = out_dir(cfg)?;
    output::write_cnr_csv(&dir.join("cnr.csv"), &circuits, &results, &kept)?;
    println!("{} circuits scored, {} kept", results.len(), kept.len());
    output::write_json(&dir.join("cnr.json"), &CnrFile { results, kept, rejected })
}

pub fn repcap(cfg: &PipelineConfig, circuits: Option<PathBuf>, cnr: Option<PathBuf>) -> Result<()> {
    let dev = cfg.device()?;
    let circuits = read_circuits(&or_default(circuits, cfg, "candidates.json"), &dev)?;
    let ds = cfg.dataset()?;
    let mut ids: Vec<usize> = match cnr {
        Some(p) => output::read_json::<CnrFile>(&p)?.kept,
        None => (0..circuits.len()).collect(),
    };
    ids.sort_unstable();
    if let Some(&bad) = ids.iter().find(|&&i| i >= circuits.len()) {
        return Err(CliError::Config(format!("candidate id {bad} not in circuits file")));
    }
    let results = repcap_stage(&circuits, &ids, &ds, &cfg.run, cfg.seed)?;
    let dir = out_dir(cfg)?;
    output::write_repcap_csv(&dir.join("repcap.csv"), &ids, &results)?;
    println!("{} circuits scored", results.len());
    Ok(())
}

fn dataset_info(ds: &Dataset) -> DatasetInfo {
    DatasetInfo {
        n_train: ds.train().len(),
        n_test: ds.test().len(),
        dim: ds.dim(),
        n_classes: ds.n_classes(),
    }
}

fn fit(c: &Circuit, ds: &Dataset, dev: &DeviceModel, cfg: &PipelineConfig, tcfg: &TrainConfig) -> Result<Trained> {
    let r = train(c, ds.train(), ds.n_classes(), tcfg)?;
    let n = ds.n_classes();
    let noisy = Backend::Noisy {
        dev,
        cfg: &cfg.run,
        seed: cfg.seed,
    };
    Ok(Trained {
        config: tcfg.clone(),
        train: evaluate(c, &r.theta, ds.train(), n, Backend::Noiseless)?,
        test: evaluate(c, &r.theta, ds.test(), n, Backend::Noiseless)?,
        test_noisy: evaluate(c, &r.theta, ds.test(), n, noisy)?,
        executions: training_executions(c, ds.train().len() as u64, tcfg.epochs as u64),
        theta: r.theta,
        history: r.history,
    })
}

fn budget(r: &RunReport, n_params: u64) -> Budget {
    // The super-circuit trains as long as the winner did, or for the full
    // default schedule when no training was run.
    let epochs = r
        .training
        .as_ref()
        .map_or(TrainConfig::default().epochs, |t| t.config.epochs) as u64;
    let sc = supercircuit_cost(
        epochs,
        r.dataset.n_train as u64,
        n_params,
        r.search.candidates.len() as u64,
        r.dataset.n_test as u64,
    );
    let total = r.search.ledger.total();
    Budget {
        supercircuit_cost: sc,
        ledger_total: total,
        ratio: if total == 0 { 0.0 } else { sc as f64 / total as f64 },
    }
}

fn n_params(r: &RunReport) -> u64 {
    r.search
        .circuit_config
        .map_or_else(|| r.search.winner_circuit().n_trainable(), |c| c.n_params) as u64
}

pub fn search(cfg: &PipelineConfig, train_winner: bool) -> Result<()> {
    let dev = cfg.device()?;
    let ds = cfg.dataset()?;
    let conf = cfg.circuit_config(&ds)?;
    let mut search = run_search(&dev, &conf, &ds, &cfg.run, cfg.n_candidates, cfg.seed)?;
    let winner = search.winner_circuit().clone();
    if let Some(v) = validate_circuit(&winner, &dev).first() {
        return Err(CliError::Config(format!("winner fails validation: {v}")));
    }
    let training = if train_winner {
        Some(fit(&winner, &ds, &dev, cfg, &cfg.train)?)
    } else {
        None
    };
    if let Some(t) = &training {
        search.ledger.training_executions = t.executions;
    }
    let mut report = RunReport {
        search,
        dataset: dataset_info(&ds),
        training,
        budget: Budget {
            supercircuit_cost: 0,
            ledger_total: 0,
            ratio: 0.0,
        },
    };
    report.budget = budget(&report, n_params(&report));

    let dir = out_dir(cfg)?;
    let circuits: Vec<Circuit> = report.search.candidates.iter().map(|c| c.circuit.clone()).collect();
    output::write_json(&dir.join("candidates.json"), &circuits)?;
    output::write_json(&dir.join("winner.json"), &winner)?;
    output::write_search_csvs(dir, &report.search)?;
    output::write_json(&dir.join("report.json"), &report)?;
    if let Some(t) = &report.training {
        output::write_json(&dir.join("trained.json"), t)?;
    }
    let summary = output::summary(&report);
    output::write_text(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn train_cmd(cfg: &PipelineConfig, circuit: Option<PathBuf>) -> Result<()> {
    let dev = cfg.device()?;
    let path = or_default(circuit, cfg, "winner.json");
    let c: Circuit = output::read_json(&path)?;
    let ds = cfg.dataset()?;
    let t = fit(&c, &ds, &dev, cfg, &cfg.train)?;
    let dir = out_dir(cfg)?;
    output::write_json(&dir.join("trained.json"), &t)?;
    println!(
        "test accuracy {:.4} (noisy {:.4}), test mse {:.4}",
        t.test.accuracy, t.test_noisy.accuracy, t.test.mse
    );
    Ok(())
}

pub fn report(path: &Path, out: Option<&Path>) -> Result<()> {
    let r: RunReport = output::read_json(path)?;
    let b = budget(&r, n_params(&r));
    let text = format!("{}\n{}", output::ledger_table(&r.search.ledger), output::budget_table(&b));
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        output::write_json(&dir.join("budget.json"), &b)?;
        output::write_text(&dir.join("budget.txt"), &text)?;
    }
    Ok(())
}
