//! Device calibration → stochastic error channels.
//!
//! Gates suffer depolarizing noise: after a 1-qubit gate a uniformly random
//! non-identity Pauli with probability `err_1q` of the acting qubit, after a
//! 2-qubit gate one of the 15 non-identity Pauli pairs with probability
//! `1 − gate_fidelity` of the edge. Readout flips each measured bit with
//! probability `1 − readout_fidelity`, applied exactly to the classical
//! distribution. T1/T2 are not turned into channels.
//!
//! Gate noise is averaged over Monte-Carlo trajectories. Clifford circuits
//! stay in the stabilizer formalism: the ideal distribution is computed once
//! and each trajectory only propagates a Pauli frame.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Circuit, DeviceModel, ProbDist, RunConfig, Shots};
use crate::seed::{derive, rng_from, Rng as SeedRng};
use crate::stabilizer::{clifford_dist, PauliFrame};
use crate::statevector::{self, Binding, StateVector};

/// Error probabilities of one circuit placed on one device.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Depolarizing probability after each gate, in circuit order.
    pub gate_error: Vec<f64>,
    /// Bit-flip probability of each measured bit.
    pub readout_flip: Vec<f64>,
}

impl NoiseSpec {
    pub fn for_circuit(c: &Circuit, dev: &DeviceModel) -> Result<NoiseSpec> {
        let phys = |q: usize| -> Result<usize> {
            let p = c.mapping()[q];
            if p >= dev.n_qubits() {
                return Err(Error::MissingCalibration(format!(
                    "logical qubit {q} maps to physical qubit {p}, device has {}",
                    dev.n_qubits()
                )));
            }
            Ok(p)
        };
        let mut gate_error = Vec::with_capacity(c.gates().len());
        for g in c.gates() {
            let p = if g.is_two_qubit() {
                let (a, b) = (phys(g.qubits[0])?, phys(g.qubits[1])?);
                let e = dev.edge(a, b).ok_or_else(|| {
                    Error::MissingCalibration(format!("no coupling between physical qubits {a} and {b}"))
                })?;
                1.0 - e.gate_fidelity
            } else {
                dev.qubit(phys(g.qubits[0])?).err_1q
            };
            gate_error.push(p.clamp(0.0, 1.0));
        }
        let readout_flip = c
            .measured()
            .iter()
            .map(|&q| Ok((1.0 - dev.qubit(phys(q)?).readout_fidelity).clamp(0.0, 1.0)))
            .collect::<Result<_>>()?;
        Ok(NoiseSpec {
            gate_error,
            readout_flip,
        })
    }

    pub fn gate_noise_free(&self) -> bool {
        self.gate_error.iter().all(|&p| p == 0.0)
    }
}

/// Draws the error after one gate: 0 for none, otherwise a Pauli code
/// (1q: 1..=3; 2q: 1..=15 with qubit-0 Pauli in the low two bits).
fn draw_error<R: Rng>(rng: &mut R, p: f64, two_qubit: bool) -> u8 {
    let u: f64 = rng.random();
    if u >= p {
        return 0;
    }
    if two_qubit {
        rng.random_range(1..16)
    } else {
        rng.random_range(1..4)
    }
}

/// Applies independent per-bit flips to a distribution; bit `k` flips with
/// probability `flips[k]`.
pub fn readout_convolve(p: &ProbDist, flips: &[f64]) -> Result<ProbDist> {
    if flips.len() != p.n_bits() {
        return Err(Error::DimensionMismatch {
            expected: p.n_bits(),
            actual: flips.len(),
        });
    }
    let mut probs = p.probs().to_vec();
    for (k, &f) in flips.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let m = 1usize << k;
        for i in 0..probs.len() {
            if i & m == 0 {
                let (a, b) = (probs[i], probs[i | m]);
                probs[i] = (1.0 - f) * a + f * b;
                probs[i | m] = f * a + (1.0 - f) * b;
            }
        }
    }
    Ok(ProbDist::from_raw(p.n_bits(), probs))
}

/// Noisy output distribution of `c` on `dev`, averaged over
/// `cfg.trajectories` trajectories. `None` binds nothing, which suits
/// circuits without trainable or embedding gates.
pub fn noisy_dist<R: Rng + ?Sized>(
    c: &Circuit,
    dev: &DeviceModel,
    binding: Option<&Binding>,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<ProbDist> {
    let base: u64 = rng.random();
    noisy_dist_seeded(c, dev, binding, cfg, base)
}

/// [`noisy_dist`] with an explicit base seed; trajectory `t` draws from the
/// stream derived from `(base, t)`.
pub fn noisy_dist_seeded(
    c: &Circuit,
    dev: &DeviceModel,
    binding: Option<&Binding>,
    cfg: &RunConfig,
    base: u64,
) -> Result<ProbDist> {
    if cfg.trajectories < 1 {
        return Err(Error::config("trajectories", "must be at least 1"));
    }
    let spec = NoiseSpec::for_circuit(c, dev)?;
    let gate_mixed = if c.is_clifford() && c.measured().len() <= crate::stabilizer::MAX_MEASURED {
        clifford_trajectories(c, &spec, cfg.trajectories, base)?
    } else {
        let none = Binding::none();
        statevector_trajectories(c, binding.unwrap_or(&none), &spec, cfg, base)?
    };
    let out = readout_convolve(&gate_mixed, &spec.readout_flip)?;
    match cfg.shots {
        Shots::Exact => Ok(out),
        Shots::Sampled(n) => {
            statevector::sample_dist(&out, n, &mut rng_from(derive(base, "shots", 0)))
        }
    }
}

fn trajectory_rng(base: u64, t: usize) -> SeedRng {
    rng_from(derive(base, "trajectory", t as u64))
}

fn clifford_trajectories(c: &Circuit, spec: &NoiseSpec, n_traj: usize, base: u64) -> Result<ProbDist> {
    let ideal = clifford_dist(c)?;
    if spec.gate_noise_free() {
        return Ok(ideal);
    }
    let measured = c.measured();
    let masks: Vec<usize> = (0..n_traj)
        .into_par_iter()
        .map(|t| {
            let mut rng = trajectory_rng(base, t);
            let mut frame = PauliFrame::new(c.n_qubits());
            for (g, &p) in c.gates().iter().zip(&spec.gate_error) {
                frame.propagate(g)?;
                let e = draw_error(&mut rng, p, g.is_two_qubit());
                if e != 0 {
                    frame.inject(g.qubits[0], e & 3);
                    if g.is_two_qubit() {
                        frame.inject(g.qubits[1], e >> 2);
                    }
                }
            }
            Ok(frame.flip_mask(measured))
        })
        .collect::<Result<_>>()?;
    let mut weight = vec![0.0; ideal.probs().len()];
    for m in masks {
        weight[m] += 1.0;
    }
    let mut probs = vec![0.0; weight.len()];
    for (m, &w) in weight.iter().enumerate().filter(|(_, w)| **w > 0.0) {
        let w = w / n_traj as f64;
        for (k, p) in probs.iter_mut().enumerate() {
            *p += w * ideal.prob(k ^ m);
        }
    }
    Ok(ProbDist::from_raw(ideal.n_bits(), probs))
}

fn statevector_trajectories(
    c: &Circuit,
    binding: &Binding,
    spec: &NoiseSpec,
    cfg: &RunConfig,
    base: u64,
) -> Result<ProbDist> {
    let ideal_state = statevector::run_bound(c, binding, cfg.qubit_cap)?;
    let ideal = statevector::measure_dist(&ideal_state, c.measured())?;
    if spec.gate_noise_free() {
        return Ok(ideal);
    }
    // Trajectories without any error reuse the ideal distribution.
    let noisy: Vec<Option<Vec<f64>>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|t| {
            let mut rng = trajectory_rng(base, t);
            let errors: Vec<u8> = c
                .gates()
                .iter()
                .zip(&spec.gate_error)
                .map(|(g, &p)| draw_error(&mut rng, p, g.is_two_qubit()))
                .collect();
            if errors.iter().all(|&e| e == 0) {
                return Ok(None);
            }
            let mut s = StateVector::zero(c.n_qubits());
            for (i, (g, &e)) in c.gates().iter().zip(&errors).enumerate() {
                s.apply_gate(g, i, binding);
                if e != 0 {
                    s.apply_pauli(g.qubits[0], e & 3);
                    if g.is_two_qubit() {
                        s.apply_pauli(g.qubits[1], e >> 2);
                    }
                }
            }
            Ok(Some(statevector::measure_dist(&s, c.measured())?.probs().to_vec()))
        })
        .collect::<Result<_>>()?;
    let mut probs = vec![0.0; ideal.probs().len()];
    let mut clean = 0usize;
    for d in &noisy {
        match d {
            None => clean += 1,
            Some(d) => probs.iter_mut().zip(d).for_each(|(p, q)| *p += q),
        }
    }
    for (p, q) in probs.iter_mut().zip(ideal.probs()) {
        *p = (*p + clean as f64 * q) / cfg.trajectories as f64;
    }
    Ok(ProbDist::from_raw(ideal.n_bits(), probs))
}
