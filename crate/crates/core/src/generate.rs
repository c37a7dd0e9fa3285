//! Device-aware candidate generation.
//!
//! A candidate lives on a connected subgraph of the device, places every
//! 2-qubit gate on a coupler of that subgraph and prefers well-calibrated
//! qubits and edges. All choices go through a temperature softmax over
//! simple calibration scores, so `tau → 0` is greedy and large `tau` is
//! uniform.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Circuit, DeviceModel, Gate, GateKind, ParamRole, RunConfig};
use crate::seed::{derive, rng_from};

/// Shape of the circuits to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub n_q: usize,
    pub n_params: usize,
    pub n_embeds: usize,
    pub n_meas: usize,
    /// Number of data features the embedding gates read.
    pub data_dim: usize,
}

impl CircuitConfig {
    pub fn validate(&self, dev: &DeviceModel) -> Result<()> {
        if self.n_q == 0 {
            return Err(Error::config("n_q", "must be at least 1"));
        }
        if self.n_q > dev.n_qubits() {
            return Err(Error::config(
                "n_q",
                format!("{} exceeds the {} qubits of device `{}`", self.n_q, dev.n_qubits(), dev.name()),
            ));
        }
        if self.n_meas == 0 || self.n_meas > self.n_q {
            return Err(Error::config("n_meas", format!("must be in 1..={}", self.n_q)));
        }
        if self.n_params + self.n_embeds == 0 {
            return Err(Error::config("n_params", "circuit needs at least one parametric gate"));
        }
        if self.n_embeds > 0 && self.data_dim == 0 {
            return Err(Error::config("data_dim", "embedding gates need at least one data dimension"));
        }
        Ok(())
    }
}

/// Softmax probabilities `exp(s_i/tau) / Σ exp(s_j/tau)`.
pub fn softmax_probs(scores: &[f64], tau: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidDistribution("softmax over no scores".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::config("tau", "must be positive"));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Draws an index with softmax probabilities over `scores`.
pub fn softmax_choose<R: Rng + ?Sized>(scores: &[f64], tau: f64, rng: &mut R) -> Result<usize> {
    let p = softmax_probs(scores, tau)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left `u` past the last bucket; fall back to the last nonzero one.
    Ok(p.iter().rposition(|&x| x > 0.0).unwrap_or(0))
}

fn component_sizes(dev: &DeviceModel) -> Vec<usize> {
    let n = dev.n_qubits();
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut size = 0;
        while let Some(q) = stack.pop() {
            size += 1;
            for &nb in dev.neighbors(q) {
                if comp[nb] == usize::MAX {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
        sizes.push(size);
    }
    comp.iter().map(|&c| sizes[c]).collect()
}

/// Samples up to `k` distinct connected subgraphs of `n_q` qubits, each grown
/// from a random seed qubit by repeatedly adding a uniformly chosen frontier
/// neighbour. Node sets are returned sorted, in first-seen order.
pub fn sample_subgraphs<R: Rng + ?Sized>(
    dev: &DeviceModel,
    n_q: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::config("n_subgraph_samples", "must be at least 1"));
    }
    if n_q == 0 || dev.largest_component() < n_q {
        return Err(Error::NoSubgraph(n_q));
    }
    let sizes = component_sizes(dev);
    let seeds: Vec<usize> = (0..dev.n_qubits()).filter(|&q| sizes[q] >= n_q).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..k {
        let start = seeds[rng.random_range(0..seeds.len())];
        let mut nodes = vec![start];
        let mut frontier: Vec<usize> = Vec::new();
        let push_frontier = |q: usize, nodes: &[usize], frontier: &mut Vec<usize>| {
            for &nb in dev.neighbors(q) {
                if !nodes.contains(&nb) && !frontier.contains(&nb) {
                    frontier.push(nb);
                }
            }
        };
        push_frontier(start, &nodes, &mut frontier);
        while nodes.len() < n_q {
            // The seed's component has at least n_q qubits, so the frontier
            // cannot run dry early.
            let q = frontier.swap_remove(rng.random_range(0..frontier.len()));
            nodes.push(q);
            push_frontier(q, &nodes, &mut frontier);
        }
        nodes.sort_unstable();
        if seen.insert(nodes.clone()) {
            out.push(nodes);
        }
    }
    Ok(out)
}

/// `0.5 · mean edge fidelity + 0.5 · mean readout fidelity` over the induced
/// subgraph; just the readout mean when it has no edges.
pub fn subgraph_score(dev: &DeviceModel, nodes: &[usize]) -> f64 {
    let r = nodes.iter().map(|&q| dev.qubit(q).readout_fidelity).sum::<f64>() / nodes.len() as f64;
    let qe: Vec<f64> = dev
        .edges()
        .iter()
        .filter(|e| nodes.contains(&e.q0) && nodes.contains(&e.q1))
        .map(|e| e.gate_fidelity)
        .collect();
    if qe.is_empty() {
        r
    } else {
        0.5 * qe.iter().sum::<f64>() / qe.len() as f64 + 0.5 * r
    }
}

/// Generates one candidate circuit for `conf` on `dev`.
pub fn generate_candidate<R: Rng + ?Sized>(
    dev: &DeviceModel,
    conf: &CircuitConfig,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<Circuit> {
    conf.validate(dev)?;
    let tau = cfg.tau;

    let subgraphs = sample_subgraphs(dev, conf.n_q, cfg.n_subgraph_samples, rng)?;
    let scores: Vec<f64> = subgraphs.iter().map(|s| subgraph_score(dev, s)).collect();
    let nodes = subgraphs[softmax_choose(&scores, tau, rng)?].clone();
    let logical = |p: usize| nodes.binary_search(&p).ok();

    let edges: Vec<(usize, usize, f64)> = dev
        .edges()
        .iter()
        .filter_map(|e| Some((logical(e.q0)?, logical(e.q1)?, e.gate_fidelity)))
        .collect();

    let n_par = conf.n_params + conf.n_embeds;
    let n_2q = if edges.is_empty() {
        0
    } else {
        (cfg.two_q_fraction * n_par as f64).floor() as usize
    };
    let mut ops: Vec<GateKind> = Vec::with_capacity(n_par + n_2q);
    for _ in 0..n_par {
        ops.push([GateKind::Rx, GateKind::Ry, GateKind::Rz][rng.random_range(0..3)]);
    }
    for _ in 0..n_2q {
        ops.push([GateKind::Cx, GateKind::Cz][rng.random_range(0..2)]);
    }
    ops.shuffle(rng);

    let max_t1 = dev.qubits().iter().map(|q| q.t1_us).fold(0.0, f64::max);
    let max_t2 = dev.qubits().iter().map(|q| q.t2_us).fold(0.0, f64::max);
    let coherence: Vec<f64> = nodes
        .iter()
        .map(|&p| dev.qubit(p).t1_us / max_t1 + dev.qubit(p).t2_us / max_t2)
        .collect();

    let mut load = vec![0usize; conf.n_q];
    let mut placed: Vec<(GateKind, Vec<usize>)> = Vec::with_capacity(ops.len());
    for kind in ops {
        if kind.arity() == 1 {
            let s1: Vec<f64> = (0..conf.n_q).map(|q| coherence[q] - 0.1 * load[q] as f64).collect();
            let q = softmax_choose(&s1, tau, rng)?;
            load[q] += 1;
            placed.push((kind, vec![q]));
        } else {
            let s2: Vec<f64> = edges
                .iter()
                .map(|&(a, b, f)| f - 0.05 * (load[a] + load[b]) as f64)
                .collect();
            let (a, b, _) = edges[softmax_choose(&s2, tau, rng)?];
            load[a] += 1;
            load[b] += 1;
            let pair = if rng.random_bool(0.5) { vec![a, b] } else { vec![b, a] };
            placed.push((kind, pair));
        }
    }

    let mut pool: Vec<usize> = (0..conf.n_q).collect();
    let mut measured = Vec::with_capacity(conf.n_meas);
    for _ in 0..conf.n_meas {
        let r: Vec<f64> = pool.iter().map(|&q| dev.qubit(nodes[q]).readout_fidelity).collect();
        measured.push(pool.remove(softmax_choose(&r, tau, rng)?));
    }

    let parametric: Vec<usize> = placed
        .iter()
        .enumerate()
        .filter(|(_, (k, _))| k.is_rotation())
        .map(|(i, _)| i)
        .collect();
    let mut embed: Vec<usize> = index::sample(rng, parametric.len(), conf.n_embeds)
        .into_iter()
        .map(|i| parametric[i])
        .collect();
    embed.sort_unstable();
    let mut dims: Vec<usize> = (0..conf.data_dim).collect();
    dims.shuffle(rng);

    let mut next_embed = 0;
    let mut next_train = 0;
    let gates = placed
        .into_iter()
        .enumerate()
        .map(|(i, (kind, qubits))| {
            let role = if !kind.is_rotation() {
                ParamRole::Fixed(Vec::new())
            } else if embed.binary_search(&i).is_ok() {
                next_embed += 1;
                ParamRole::Embedding(dims[(next_embed - 1) % dims.len()])
            } else {
                next_train += 1;
                ParamRole::Trainable(next_train - 1)
            };
            Gate::new(kind, qubits, role)
        })
        .collect::<Result<Vec<_>>>()?;

    Circuit::new(conf.n_q, gates, measured, nodes)
}

/// Generates `n` candidates in parallel; candidate `i` draws from the stream
/// derived from `(seed, "candidate", i)`.
pub fn generate_candidates(
    dev: &DeviceModel,
    conf: &CircuitConfig,
    cfg: &RunConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<Circuit>> {
    conf.validate(dev)?;
    (0..n)
        .into_par_iter()
        .map(|i| generate_candidate(dev, conf, cfg, &mut rng_from(derive(seed, "candidate", i as u64))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_circuit, EdgeCalibration, QubitCalibration, SyntheticCalibration, Topology};

    fn conf(n_q: usize, n_params: usize, n_embeds: usize, n_meas: usize, data_dim: usize) -> CircuitConfig {
        CircuitConfig { n_q, n_params, n_embeds, n_meas, data_dim }
    }

    #[test]
    fn softmax_two_scores() {
        let p = softmax_probs(&[1.0, 0.9], 0.1).unwrap();
        let e = 1.0f64.exp();
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.731).abs() < 1e-3);
    }

    #[test]
    fn softmax_errors_and_greedy_limit() {
        assert!(softmax_choose(&[], 1.0, &mut rng_from(0)).is_err());
        assert!(softmax_probs(&[1.0], 0.0).is_err());
        let mut rng = rng_from(5);
        for _ in 0..10_000 {
            assert_eq!(softmax_choose(&[0.2, 0.9, 0.5], 1e-6, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn softmax_equal_scores_uniform_chi_square() {
        let mut rng = rng_from(11);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[softmax_choose(&[0.3; 4], 0.05, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        // 3 degrees of freedom, alpha = 0.01
        assert!(chi2 < 11.345, "{counts:?}");
    }

    #[test]
    fn subgraphs_on_line() {
        let dev = DeviceModel::noiseless(Topology::Line(3));
        let subs = sample_subgraphs(&dev, 2, 16, &mut rng_from(0)).unwrap();
        for s in &subs {
            assert!(s == &vec![0, 1] || s == &vec![1, 2]);
        }
        let full = sample_subgraphs(&dev, 3, 4, &mut rng_from(0)).unwrap();
        assert_eq!(full, vec![vec![0, 1, 2]]);
        assert!(matches!(sample_subgraphs(&dev, 4, 4, &mut rng_from(0)), Err(Error::NoSubgraph(4))));
    }

    #[test]
    fn subgraphs_cover_all_connected_triples_of_square() {
        let dev = DeviceModel::noiseless(Topology::Grid { rows: 2, cols: 2 });
        // Enumeration oracle: every 3-subset of a 4-cycle is connected.
        let mut all = BTreeSet::new();
        for seed in 0..100 {
            for s in sample_subgraphs(&dev, 3, 32, &mut rng_from(seed)).unwrap() {
                all.insert(s);
            }
        }
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn candidate_matches_config_and_device() {
        let dev = DeviceModel::synthetic(Topology::HeavyHex7, &SyntheticCalibration::default(), 1);
        let cf = conf(4, 16, 4, 1, 2);
        for seed in 0..50 {
            let c = generate_candidate(&dev, &cf, &RunConfig::default(), &mut rng_from(seed)).unwrap();
            assert!(validate_circuit(&c, &dev).is_empty());
            assert_eq!(c.n_trainable(), 16);
            assert_eq!(c.n_embedding(), 4);
            assert_eq!(c.measured().len(), 1);
            assert_eq!(c.two_qubit_count(), 6);
            assert_eq!(c.gates().len(), 26);
        }
    }

    #[test]
    fn every_dimension_embedded_once() {
        let dev = DeviceModel::noiseless(Topology::Ring(6));
        for seed in 0..20 {
            let c = generate_candidate(&dev, &conf(4, 6, 4, 2, 4), &RunConfig::default(), &mut rng_from(seed)).unwrap();
            let mut dims: Vec<usize> = c
                .gates()
                .iter()
                .filter_map(|g| match g.role {
                    ParamRole::Embedding(d) => Some(d),
                    _ => None,
                })
                .collect();
            dims.sort_unstable();
            assert_eq!(dims, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let dev = DeviceModel::synthetic(Topology::Grid { rows: 3, cols: 3 }, &SyntheticCalibration::default(), 2);
        let cf = conf(5, 10, 3, 2, 3);
        let a = generate_candidates(&dev, &cf, &RunConfig::default(), 8, 42).unwrap();
        let b = generate_candidates(&dev, &cf, &RunConfig::default(), 8, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    fn line3(f01: f64, f12: f64, readout: [f64; 3]) -> DeviceModel {
        let qubits = readout
            .iter()
            .map(|&r| QubitCalibration { t1_us: 100.0, t2_us: 100.0, readout_fidelity: r, err_1q: 0.0 })
            .collect();
        let edges = vec![
            EdgeCalibration { q0: 0, q1: 1, gate_fidelity: f01 },
            EdgeCalibration { q0: 1, q1: 2, gate_fidelity: f12 },
        ];
        DeviceModel::new("line3", qubits, edges).unwrap()
    }

    #[test]
    fn better_edge_hosts_most_two_qubit_gates() {
        let dev = line3(0.99, 0.80, [0.98; 3]);
        let cf = conf(3, 2, 0, 1, 0);
        let cfg = RunConfig { two_q_fraction: 0.5, ..Default::default() };
        let (mut good, mut total) = (0usize, 0usize);
        for seed in 0..10_000 {
            let c = generate_candidate(&dev, &cf, &cfg, &mut rng_from(seed)).unwrap();
            for g in c.gates().iter().filter(|g| g.is_two_qubit()) {
                total += 1;
                let mut p = [c.mapping()[g.qubits[0]], c.mapping()[g.qubits[1]]];
                p.sort_unstable();
                good += (p == [0, 1]) as usize;
            }
        }
        assert!(good as f64 / total as f64 > 0.9, "{good}/{total}");
    }

    #[test]
    fn readout_fidelity_raises_measurement_frequency() {
        let count = |r1: f64| {
            let dev = line3(0.95, 0.95, [0.95, r1, 0.95]);
            (0..10_000)
                .filter(|&s| {
                    let c = generate_candidate(&dev, &conf(3, 2, 0, 1, 0), &RunConfig::default(), &mut rng_from(s)).unwrap();
                    c.mapping()[c.measured()[0]] == 1
                })
                .count()
        };
        let (lo, mid, hi) = (count(0.90), count(0.95), count(0.99));
        assert!(lo <= mid && mid <= hi, "{lo} {mid} {hi}");
        assert!(hi > 5000);
    }

    #[test]
    fn config_errors() {
        let dev = DeviceModel::noiseless(Topology::Line(3));
        let cfg = RunConfig::default();
        let mut rng = rng_from(0);
        for bad in [conf(4, 2, 0, 1, 0), conf(0, 2, 0, 1, 0), conf(2, 2, 0, 3, 0), conf(2, 2, 1, 1, 0), conf(2, 0, 0, 1, 0)] {
            assert!(matches!(generate_candidate(&dev, &bad, &cfg, &mut rng), Err(Error::InvalidConfig { .. })), "{bad:?}");
        }
    }
}
