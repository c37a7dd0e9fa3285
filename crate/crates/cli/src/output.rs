//! Files written by the subcommands.

use std::fmt::Write as _;
use std::path::Path;

use elivagar::cnr::CnrResult;
use elivagar::model::Circuit;
use elivagar::repcap::RepCapResult;
use elivagar::search::{Ledger, SearchReport};
use elivagar::train::{Metrics, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub n_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub config: TrainConfig,
    pub theta: Vec<f64>,
    pub history: Vec<f64>,
    pub train: Metrics,
    pub test: Metrics,
    pub test_noisy: Metrics,
    pub executions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub supercircuit_cost: u64,
    pub ledger_total: u64,
    /// `supercircuit_cost / ledger_total`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub search: SearchReport,
    pub dataset: DatasetInfo,
    pub training: Option<Trained>,
    pub budget: Budget,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CnrFile {
    pub results: Vec<CnrResult>,
    pub kept: Vec<usize>,
    pub rejected: Vec<usize>,
}

#[derive(Serialize)]
struct CnrRow {
    id: usize,
    gates: usize,
    two_qubit: usize,
    cnr: f64,
    kept: bool,
}

#[derive(Serialize)]
struct RepRow {
    id: usize,
    rep: f64,
    executions: u64,
    physical_executions: u64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn cnr_row(c: &Circuit, id: usize, cnr: f64, kept: bool) -> CnrRow {
    CnrRow {
        id,
        gates: c.gates().len(),
        two_qubit: c.two_qubit_count(),
        cnr,
        kept,
    }
}

pub fn write_cnr_csv(path: &Path, circuits: &[Circuit], results: &[CnrResult], kept: &[usize]) -> Result<()> {
    write_csv(
        path,
        results
            .iter()
            .map(|r| cnr_row(&circuits[r.id], r.id, r.cnr, kept.contains(&r.id))),
    )
}

pub fn write_repcap_csv(path: &Path, ids: &[usize], results: &[RepCapResult]) -> Result<()> {
    write_csv(
        path,
        ids.iter().zip(results).map(|(&id, r)| RepRow {
            id,
            rep: r.rep,
            executions: r.executions,
            physical_executions: r.physical_executions,
        }),
    )
}

/// `cnr.csv` and `repcap.csv` of a finished search.
pub fn write_search_csvs(dir: &Path, s: &SearchReport) -> Result<()> {
    write_csv(
        &dir.join("cnr.csv"),
        s.candidates.iter().map(|c| cnr_row(&c.circuit, c.id, c.cnr, !c.rejected)),
    )?;
    let per = (s.run_config.d_c * s.run_config.n_p * s.n_classes) as u64;
    write_csv(
        &dir.join("repcap.csv"),
        s.kept().map(|c| RepRow {
            id: c.id,
            rep: c.rep.unwrap_or(f64::NAN),
            executions: per,
            physical_executions: per * s.run_config.n_bases as u64,
        }),
    )
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Aligned-column overview of a finished run.
pub fn summary(r: &RunReport) -> String {
    let s = &r.search;
    let mut out = String::new();
    let _ = writeln!(out, "seed {}  candidates {}  kept {}", s.seed, s.candidates.len(), s.kept().count());
    let _ = writeln!(
        out,
        "{:>4}  {:<16}  {:>5}  {:>3}  {:>6}  {:<8}  {:>6}  {:>6}",
        "id", "qubits", "gates", "2q", "cnr", "status", "rep", "score"
    );
    for c in &s.candidates {
        let qubits = format!("{:?}", c.circuit.mapping());
        let status = if c.id == s.winner {
            "winner"
        } else if c.rejected {
            "rejected"
        } else {
            "kept"
        };
        let _ = writeln!(
            out,
            "{:>4}  {:<16}  {:>5}  {:>3}  {:>6.4}  {:<8}  {:>6}  {:>6}",
            c.id,
            qubits,
            c.circuit.gates().len(),
            c.circuit.two_qubit_count(),
            c.cnr,
            status,
            opt(c.rep),
            opt(c.score)
        );
    }
    let _ = writeln!(out);
    out.push_str(&ledger_table(&s.ledger));
    if let Some(t) = &r.training {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<22}{:>10}{:>10}", "winner metrics", "accuracy", "mse");
        for (name, m) in [("train", &t.train), ("test", &t.test), ("test (noisy)", &t.test_noisy)] {
            let _ = writeln!(out, "{:<22}{:>10.4}{:>10.4}", name, m.accuracy, m.mse);
        }
    }
    let _ = writeln!(out);
    out.push_str(&budget_table(&r.budget));
    out
}

pub fn ledger_table(l: &Ledger) -> String {
    let mut out = String::new();
    for (name, v) in [
        ("generation", l.generation),
        ("cnr executions", l.cnr_executions),
        ("repcap executions", l.repcap_executions),
        ("repcap (per basis)", l.repcap_physical_executions),
        ("training executions", l.training_executions),
        ("total", l.total()),
    ] {
        let _ = writeln!(out, "{name:<22}{v:>14}");
    }
    out
}

pub fn budget_table(b: &Budget) -> String {
    format!(
        "{:<22}{:>14}\n{:<22}{:>14}\n{:<22}{:>14.2}\n",
        "supercircuit cost", b.supercircuit_cost, "ledger total", b.ledger_total, "ratio", b.ratio
    )
}
