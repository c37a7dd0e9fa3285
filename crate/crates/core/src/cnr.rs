//! Clifford noise resilience: how much a circuit's structure suffers from
//! device noise, measured on Clifford copies that a stabilizer simulator can
//! run exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{tvd, Circuit, DeviceModel, Gate, RejectionRule, RunConfig};
use crate::noise::noisy_dist_seeded;
use crate::seed::{derive, rng_from};
use crate::stabilizer::clifford_dist;

/// Replica fidelities of one circuit and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnrResult {
    pub id: usize,
    pub fidelities: Vec<f64>,
    pub cnr: f64,
}

impl CnrResult {
    pub fn from_fidelities(id: usize, fidelities: Vec<f64>) -> Result<CnrResult> {
        if fidelities.is_empty() {
            return Err(Error::config("m_replicas", "must be at least 1"));
        }
        let cnr = fidelities.iter().sum::<f64>() / fidelities.len() as f64;
        Ok(CnrResult { id, fidelities, cnr })
    }
}

const REPLICA_1Q: [fn(usize) -> Gate; 5] = [Gate::h, Gate::s, Gate::z, Gate::x, Gate::y];

/// Same structure as `c` with every 1-qubit gate replaced by a uniformly
/// drawn gate from {H, S, Z, X, Y} and every 2-qubit gate by CX on the same
/// qubit pair.
pub fn make_replica<R: Rng + ?Sized>(c: &Circuit, rng: &mut R) -> Circuit {
    let gates = c
        .gates()
        .iter()
        .map(|g| {
            if g.is_two_qubit() {
                Gate::cx(g.qubits[0], g.qubits[1])
            } else {
                REPLICA_1Q[rng.random_range(0..REPLICA_1Q.len())](g.qubits[0])
            }
        })
        .collect();
    c.with_gates(gates).expect("replica keeps qubits and measured set of a valid circuit")
}

/// CNR of `c` with `cfg.m_replicas` replicas, drawing one base seed from `rng`.
pub fn cnr_score<R: Rng + ?Sized>(
    id: usize,
    c: &Circuit,
    dev: &DeviceModel,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<CnrResult> {
    cnr_score_seeded(id, c, dev, cfg, rng.random())
}

/// CNR with replica `j` built from the stream `(seed, "replica", j)` and its
/// noise drawn from `(seed, "replica-noise", j)`.
pub fn cnr_score_seeded(id: usize, c: &Circuit, dev: &DeviceModel, cfg: &RunConfig, seed: u64) -> Result<CnrResult> {
    if cfg.m_replicas == 0 {
        return Err(Error::config("m_replicas", "must be at least 1"));
    }
    let fidelities = (0..cfg.m_replicas as u64)
        .into_par_iter()
        .map(|j| {
            let replica = make_replica(c, &mut rng_from(derive(seed, "replica", j)));
            let ideal = clifford_dist(&replica)?;
            let noisy = noisy_dist_seeded(&replica, dev, None, cfg, derive(seed, "replica-noise", j))?;
            Ok((1.0 - tvd(&ideal, &noisy)?).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    CnrResult::from_fidelities(id, fidelities)
}

/// Outcome of early rejection. `kept` is in rank order, `rejected` by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub kept: Vec<usize>,
    pub rejected: Vec<usize>,
}

/// Ranks results by descending CNR (ties by ascending id) and keeps those
/// that clear the threshold and fall within the top `⌈keep_fraction·N⌉`;
/// with [`RejectionRule::Any`] either condition suffices.
pub fn reject(results: &[CnrResult], cfg: &RunConfig) -> Rejection {
    let mut order: Vec<&CnrResult> = results.iter().collect();
    order.sort_by(|a, b| b.cnr.total_cmp(&a.cnr).then(a.id.cmp(&b.id)));
    let cut = (cfg.keep_fraction * results.len() as f64).ceil() as usize;
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (rank, r) in order.iter().enumerate() {
        let above = r.cnr >= cfg.cnr_threshold;
        let top = rank < cut;
        let keep = match cfg.rejection {
            RejectionRule::All => above && top,
            RejectionRule::Any => above || top,
        };
        if keep {
            kept.push(r.id);
        } else {
            rejected.push(r.id);
        }
    }
    rejected.sort_unstable();
    Rejection { kept, rejected }
}
