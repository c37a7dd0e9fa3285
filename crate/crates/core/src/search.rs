//! The search pipeline: generate candidates, screen them by CNR, score the
//! survivors by representational capacity, and pick the best composite
//! score. Also the reference fidelity estimate and execution accounting.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnr::{cnr_score_seeded, reject, CnrResult, Rejection};
use crate::error::{Error, Result};
use crate::generate::{generate_candidates, CircuitConfig};
use crate::model::{tvd, Circuit, Dataset, DeviceModel, RunConfig};
use crate::noise::noisy_dist_seeded;
use crate::repcap::{repcap_score_with, RepCapContext, RepCapResult};
use crate::seed::{derive, rng_from};
use crate::statevector::{self, Binding};

/// `cnr^alpha · rep`.
pub fn composite_score(cnr: f64, rep: f64, alpha: f64) -> Result<f64> {
    if cnr < 0.0 || cnr.is_nan() {
        return Err(Error::config("cnr", format!("{cnr} is negative")));
    }
    if !(alpha > 0.0) {
        return Err(Error::config("alpha_cnr", "must be positive"));
    }
    Ok(cnr.powf(alpha) * rep)
}

/// Mean of `1 − tvd(noiseless, noisy)` over `k` random inputs (features
/// uniform over `[0, π]`) and parameters (uniform over `[0, 2π)`).
pub fn true_fidelity<R: Rng + ?Sized>(
    c: &Circuit,
    dev: &DeviceModel,
    cfg: &RunConfig,
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    true_fidelity_seeded(c, dev, cfg, k, rng.random())
}

pub fn true_fidelity_seeded(c: &Circuit, dev: &DeviceModel, cfg: &RunConfig, k: usize, seed: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::config("fidelity_samples", "must be at least 1"));
    }
    let fids = (0..k as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng_from(derive(seed, "inputs", j));
            let x: Vec<f64> = (0..c.data_dim_needed())
                .map(|_| rng.random::<f64>() * std::f64::consts::PI)
                .collect();
            let theta: Vec<f64> = (0..c.n_trainable())
                .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
                .collect();
            let b = Binding::new(&x, &theta);
            let ideal = statevector::measure_dist(&statevector::run_bound(c, &b, cfg.qubit_cap)?, c.measured())?;
            let noisy = noisy_dist_seeded(c, dev, Some(&b), cfg, derive(seed, "noise", j))?;
            Ok(1.0 - tvd(&ideal, &noisy)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fids.iter().sum::<f64>() / k as f64)
}

/// Executions to train a weight-sharing super-circuit for `t` epochs and
/// then evaluate `n` subcircuits: `2·t·x_train·p_bar + n·x_valid`.
pub fn supercircuit_cost(t: u64, x_train: u64, p_bar: u64, n: u64, x_valid: u64) -> u64 {
    2 * t * x_train * p_bar + n * x_valid
}

/// Executions to score `n_candidates` circuits by representational
/// capacity: `d_c · n_p · n_classes` each (512 per class with defaults).
pub fn repcap_cost(n_candidates: u64, n_classes: u64, cfg: &RunConfig) -> u64 {
    (cfg.d_c * cfg.n_p) as u64 * n_classes * n_candidates
}

/// Executions for parameter-shift training: per sample and step, one
/// forward run plus two per trainable gate.
pub fn training_executions(c: &Circuit, n_train: u64, epochs: u64) -> u64 {
    let shifted = c.gates().iter().filter(|g| g.role.trainable_index().is_some()).count() as u64;
    epochs * n_train * (1 + 2 * shifted)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub generation: u64,
    /// One per Clifford replica.
    pub cnr_executions: u64,
    /// One per (sample, parameter draw) of each scored candidate.
    pub repcap_executions: u64,
    /// As above, counting every measurement basis.
    pub repcap_physical_executions: u64,
    pub training_executions: u64,
}

impl Ledger {
    pub fn total(&self) -> u64 {
        self.generation + self.cnr_executions + self.repcap_executions + self.training_executions
    }

    /// Candidates whose performance was evaluated.
    pub fn performance_evaluations(&self, n_classes: u64, cfg: &RunConfig) -> u64 {
        let per = repcap_cost(1, n_classes, cfg);
        if per == 0 {
            0
        } else {
            self.repcap_executions / per
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: usize,
    pub circuit: Circuit,
    pub cnr: f64,
    pub rejected: bool,
    pub rep: Option<f64>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub seed: u64,
    pub circuit_config: Option<CircuitConfig>,
    pub run_config: RunConfig,
    pub n_classes: usize,
    pub candidates: Vec<CandidateRecord>,
    pub winner: usize,
    pub ledger: Ledger,
}

impl SearchReport {
    pub fn winner_circuit(&self) -> &Circuit {
        &self.candidates[self.winner].circuit
    }

    pub fn kept(&self) -> impl Iterator<Item = &CandidateRecord> {
        self.candidates.iter().filter(|c| !c.rejected)
    }
}

/// Seed of the candidate-generation stage.
pub fn generation_seed(root: u64) -> u64 {
    derive(root, "generation", 0)
}

/// Seed of candidate `id`'s CNR estimate.
pub fn cnr_seed(root: u64, id: usize) -> u64 {
    derive(root, "cnr", id as u64)
}

/// Seed of candidate `id`'s parameter draws for representational capacity.
pub fn repcap_seed(root: u64, id: usize) -> u64 {
    derive(root, "repcap", id as u64)
}

/// Samples and bases for representational capacity, shared by all
/// candidates of the search rooted at `root`.
pub fn repcap_context(ds: &Dataset, n_meas: usize, cfg: &RunConfig, root: u64) -> Result<RepCapContext> {
    RepCapContext::new(ds, n_meas, cfg, &mut rng_from(derive(root, "repcap-context", 0)))
}

/// CNR of every circuit, in order, with ids `0..n`.
pub fn cnr_stage(circuits: &[Circuit], dev: &DeviceModel, cfg: &RunConfig, root: u64) -> Result<Vec<CnrResult>> {
    circuits
        .par_iter()
        .enumerate()
        .map(|(id, c)| cnr_score_seeded(id, c, dev, cfg, cnr_seed(root, id)))
        .collect()
}

/// Representational capacity of the listed candidates. The shared bases
/// cover the widest measurement of the whole pool, so scores do not depend
/// on which candidates were kept.
pub fn repcap_stage(
    circuits: &[Circuit],
    ids: &[usize],
    ds: &Dataset,
    cfg: &RunConfig,
    root: u64,
) -> Result<Vec<RepCapResult>> {
    let width = circuits.iter().map(|c| c.measured().len()).max().unwrap_or(1);
    let ctx = repcap_context(ds, width, cfg, root)?;
    ids.par_iter()
        .map(|&id| repcap_score_with(&circuits[id], &ctx, cfg, repcap_seed(root, id)))
        .collect()
}

/// Generates `n_candidates` circuits and runs [`search_candidates`] on them.
pub fn run_search(
    dev: &DeviceModel,
    conf: &CircuitConfig,
    ds: &Dataset,
    cfg: &RunConfig,
    n_candidates: usize,
    seed: u64,
) -> Result<SearchReport> {
    cfg.validate()?;
    if n_candidates < 2 {
        return Err(Error::config("n_candidates", "a search needs at least 2 candidates"));
    }
    if conf.n_embeds > 0 && conf.data_dim != ds.dim() {
        return Err(Error::DataDimension {
            needed: conf.data_dim,
            actual: ds.dim(),
        });
    }
    let circuits = generate_candidates(dev, conf, cfg, n_candidates, generation_seed(seed))?;
    let mut report = search_candidates(circuits, dev, ds, cfg, seed)?;
    report.circuit_config = Some(*conf);
    Ok(report)
}

/// Screens, scores and ranks given candidates; candidate ids are their
/// positions. Fails with [`Error::NoSurvivors`] if rejection keeps nothing.
pub fn search_candidates(
    circuits: Vec<Circuit>,
    dev: &DeviceModel,
    ds: &Dataset,
    cfg: &RunConfig,
    seed: u64,
) -> Result<SearchReport> {
    cfg.validate()?;
    if circuits.is_empty() {
        return Err(Error::config("n_candidates", "no candidates to search"));
    }
    if let Some(c) = circuits.iter().find(|c| c.data_dim_needed() > ds.dim()) {
        return Err(Error::DataDimension {
            needed: c.data_dim_needed(),
            actual: ds.dim(),
        });
    }
    let cnrs = cnr_stage(&circuits, dev, cfg, seed)?;
    let Rejection { kept, .. } = reject(&cnrs, cfg);
    if kept.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let reps = repcap_stage(&circuits, &kept, ds, cfg, seed)?;

    let mut candidates: Vec<CandidateRecord> = circuits
        .into_iter()
        .zip(&cnrs)
        .map(|(circuit, r)| CandidateRecord {
            id: r.id,
            circuit,
            cnr: r.cnr,
            rejected: true,
            rep: None,
            score: None,
        })
        .collect();
    let mut ledger = Ledger {
        generation: 0,
        cnr_executions: (cfg.m_replicas * candidates.len()) as u64,
        ..Ledger::default()
    };
    for (&id, r) in kept.iter().zip(&reps) {
        let c = &mut candidates[id];
        c.rejected = false;
        c.rep = Some(r.rep);
        c.score = Some(composite_score(c.cnr, r.rep, cfg.alpha_cnr)?);
        ledger.repcap_executions += r.executions;
        ledger.repcap_physical_executions += r.physical_executions;
    }
    let winner = candidates
        .iter()
        .filter(|c| !c.rejected)
        .max_by(|a, b| {
            let (sa, sb) = (a.score.unwrap_or(f64::NEG_INFINITY), b.score.unwrap_or(f64::NEG_INFINITY));
            sa.total_cmp(&sb).then(a.cnr.total_cmp(&b.cnr)).then(b.id.cmp(&a.id))
        })
        .map(|c| c.id)
        .ok_or(Error::NoSurvivors)?;
    Ok(SearchReport {
        seed,
        circuit_config: None,
        run_config: cfg.clone(),
        n_classes: ds.n_classes(),
        candidates,
        winner,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSpec;
    use crate::model::{CircuitBuilder, EdgeCalibration, Gate, GateKind, ParamRole, QubitCalibration, Topology};

    #[test]
    fn composite_examples() {
        assert_eq!(composite_score(1.0, 0.37, 0.5).unwrap(), 0.37);
        assert!((composite_score(0.81, 0.5, 0.5).unwrap() - 0.45).abs() < 1e-12);
        assert!(composite_score(-0.1, 0.5, 0.5).is_err());
    }

    #[test]
    fn cost_examples() {
        assert_eq!(supercircuit_cost(200, 600, 20, 500, 120), 4_860_000);
        assert_eq!(supercircuit_cost(0, 0, 0, 0, 0), 0);
        assert_eq!(repcap_cost(100, 2, &RunConfig::default()), 102_400);
    }

    fn one_qubit_device(readout: f64) -> DeviceModel {
        DeviceModel::new(
            "one",
            vec![QubitCalibration { t1_us: 50.0, t2_us: 50.0, readout_fidelity: readout, err_1q: 0.0 }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let c = CircuitBuilder::new(1)
            .gate(Gate::rotation(GateKind::Rz, 0, ParamRole::Trainable(0)))
            .build()
            .unwrap();
        let cfg = RunConfig::default();
        let f = true_fidelity(&c, &one_qubit_device(0.9), &cfg, 4, &mut rng_from(0)).unwrap();
        assert!((f - 0.9).abs() < 1e-12);
        let f = true_fidelity(&c, &one_qubit_device(1.0), &cfg, 4, &mut rng_from(0)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!(true_fidelity(&c, &one_qubit_device(1.0), &cfg, 0, &mut rng_from(0)).is_err());
    }

    fn small_moons() -> Dataset {
        let mut spec = DataSpec::moons_default(1);
        spec.source = crate::data::DataSource::Moons { n: 80, noise_sd: 0.1, seed: 1 };
        spec.train_fraction = 0.75;
        spec.load().unwrap()
    }

    fn small_cfg() -> RunConfig {
        RunConfig { d_c: 4, n_p: 4, m_replicas: 8, trajectories: 64, ..Default::default() }
    }

    #[test]
    fn noisy_pair_loses_to_clean_pair() {
        let q = QubitCalibration { t1_us: 50.0, t2_us: 50.0, readout_fidelity: 1.0, err_1q: 0.0 };
        let dev = DeviceModel::new(
            "split",
            vec![q; 3],
            vec![
                EdgeCalibration { q0: 0, q1: 1, gate_fidelity: 0.5 },
                EdgeCalibration { q0: 1, q1: 2, gate_fidelity: 1.0 },
            ],
        )
        .unwrap();
        let body = |mapping: Vec<usize>| {
            CircuitBuilder::new(2)
                .gates([
                    Gate::rotation(GateKind::Rx, 0, ParamRole::Embedding(0)),
                    Gate::cx(0, 1),
                    Gate::rotation(GateKind::Ry, 1, ParamRole::Trainable(0)),
                    Gate::cx(0, 1),
                    Gate::cx(1, 0),
                ])
                .measure([0, 1])
                .mapping(mapping)
                .build()
                .unwrap()
        };
        let r = search_candidates(vec![body(vec![0, 1]), body(vec![1, 2])], &dev, &small_moons(), &small_cfg(), 3).unwrap();
        assert!(r.candidates[0].rejected && r.candidates[0].rep.is_none());
        assert!(r.candidates[0].cnr < 0.7);
        assert_eq!(r.winner, 1);
        assert_eq!(r.ledger.cnr_executions, 16);
        assert_eq!(r.ledger.repcap_executions, 2 * 4 * 4);
    }

    #[test]
    fn noiseless_device_ranks_by_rep() {
        let dev = DeviceModel::noiseless(Topology::HeavyHex7);
        let conf = CircuitConfig { n_q: 3, n_params: 4, n_embeds: 2, n_meas: 1, data_dim: 2 };
        let cfg = RunConfig { keep_fraction: 1.0, ..small_cfg() };
        let r = run_search(&dev, &conf, &small_moons(), &cfg, 6, 11).unwrap();
        for c in &r.candidates {
            assert!((c.cnr - 1.0).abs() < 1e-9);
            assert!((c.score.unwrap() - c.rep.unwrap()).abs() < 1e-9);
        }
        let best_rep = r.kept().map(|c| c.rep.unwrap()).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.candidates[r.winner].rep.unwrap(), best_rep);
        assert_eq!(r, run_search(&dev, &conf, &small_moons(), &cfg, 6, 11).unwrap());
    }

    #[test]
    fn rejection_halves_evaluations() {
        let dev = DeviceModel::synthetic(Topology::HeavyHex7, &Default::default(), 4);
        let conf = CircuitConfig { n_q: 3, n_params: 4, n_embeds: 2, n_meas: 1, data_dim: 2 };
        let cfg = small_cfg();
        let ds = small_moons();
        let r = run_search(&dev, &conf, &ds, &cfg, 7, 2).unwrap();
        assert!(r.kept().count() <= 4);
        assert_eq!(r.ledger.performance_evaluations(2, &cfg), r.kept().count() as u64);
        assert!(matches!(run_search(&dev, &conf, &ds, &cfg, 1, 2), Err(Error::InvalidConfig { .. })));
        let strict = RunConfig { cnr_threshold: 1.0, ..cfg };
        assert!(matches!(run_search(&dev, &conf, &ds, &strict, 4, 2), Err(Error::NoSurvivors)));
    }
}
