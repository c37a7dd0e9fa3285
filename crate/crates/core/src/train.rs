//! Parameter-shift training and evaluation of a classifier circuit.
//!
//! Class probabilities come from Z expectations of the measured qubits: one
//! measured qubit on a binary task gives `p(1) = (1 − ⟨Z⟩)/2`, otherwise the
//! first `n_c` expectations are softmax logits. The loss is the mean squared
//! error between class probabilities and one-hot labels, minimized with Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Circuit, DeviceModel, ParamRole, RunConfig, Sample};
use crate::noise::noisy_dist_seeded;
use crate::seed::{derive, rng_from};
use crate::statevector::{self, Binding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Parameter-shift offset.
    pub shift: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch: 128,
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            shift: std::f64::consts::FRAC_PI_2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "must be at least 1"));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::config("lr", "must be a non-negative number"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta1", "Adam decay rates must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be positive"));
        }
        if (self.shift.sin()).abs() < 1e-6 {
            return Err(Error::config("shift", "sin(shift) must be nonzero"));
        }
        Ok(())
    }
}

/// Number of measured qubits the prediction reads.
fn readout_width(c: &Circuit, n_classes: usize) -> Result<usize> {
    let m = c.measured().len();
    if n_classes < 2 {
        return Err(Error::InvalidDataset(format!("need at least 2 classes, got {n_classes}")));
    }
    if n_classes == 2 && m == 1 {
        return Ok(1);
    }
    if m < n_classes {
        return Err(Error::InvalidCircuit(format!(
            "{n_classes} classes need at least {n_classes} measured qubits, circuit measures {m}"
        )));
    }
    Ok(n_classes)
}

/// Class probabilities from the expectations of the read-out qubits.
pub fn probs_from_z(z: &[f64], n_classes: usize) -> Vec<f64> {
    if z.len() == 1 && n_classes == 2 {
        return vec![(1.0 + z[0]) / 2.0, (1.0 - z[0]) / 2.0];
    }
    let z = &z[..n_classes];
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `∂p_c/∂z_k` for [`probs_from_z`].
fn probs_jacobian(p: &[f64], width: usize) -> Vec<Vec<f64>> {
    if width == 1 {
        return vec![vec![0.5], vec![-0.5]];
    }
    (0..p.len())
        .map(|c| (0..width).map(|k| p[c] * ((c == k) as u8 as f64 - p[k])).collect())
        .collect()
}

fn z_of(c: &Circuit, binding: &Binding, width: usize) -> Result<Vec<f64>> {
    let s = statevector::run_bound(c, binding, usize::MAX)?;
    statevector::z_expectations(&s, &c.measured()[..width])
}

/// Noiseless class probabilities for one input.
pub fn predict(c: &Circuit, x: &[f64], theta: &[f64], n_classes: usize) -> Result<Vec<f64>> {
    let width = readout_width(c, n_classes)?;
    Ok(probs_from_z(&z_of(c, &Binding::new(x, theta), width)?, n_classes))
}

/// Expectations of the first `width` measured qubits and their Jacobian
/// `jac[k][p] = ∂⟨Z_k⟩/∂θ_p`, each gate's contribution from the two shifted
/// runs `(f(+s) − f(−s)) / (2 sin s)`.
pub fn expectation_jacobian(
    c: &Circuit,
    x: &[f64],
    theta: &[f64],
    width: usize,
    shift: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let b = Binding::new(x, theta);
    b.check(c)?;
    let z = z_of(c, &b, width)?;
    let mut jac = vec![vec![0.0; c.n_trainable()]; width];
    let denom = 2.0 * shift.sin();
    for (i, g) in c.gates().iter().enumerate() {
        if let ParamRole::Trainable(p) = g.role {
            let plus = z_of(c, &b.shifted(i, shift), width)?;
            let minus = z_of(c, &b.shifted(i, -shift), width)?;
            for k in 0..width {
                jac[k][p] += (plus[k] - minus[k]) / denom;
            }
        }
    }
    Ok((z, jac))
}

fn sample_loss(p: &[f64], y: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(c, &pc)| (pc - (c == y) as u8 as f64).powi(2))
        .sum::<f64>()
        / p.len() as f64
}

/// Mean MSE loss over `batch` and its gradient with respect to θ.
pub fn loss_and_gradient(
    c: &Circuit,
    batch: &[Sample],
    theta: &[f64],
    n_classes: usize,
    shift: f64,
) -> Result<(f64, Vec<f64>)> {
    let width = readout_width(c, n_classes)?;
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| {
            let (z, jac) = expectation_jacobian(c, &s.x, theta, width, shift)?;
            let p = probs_from_z(&z, n_classes);
            let dp = probs_jacobian(&p, width);
            let dl_dp: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(cl, &pc)| 2.0 * (pc - (cl == s.y) as u8 as f64) / n_classes as f64)
                .collect();
            let mut g = vec![0.0; theta.len()];
            for k in 0..width {
                let dl_dz: f64 = (0..n_classes).map(|cl| dl_dp[cl] * dp[cl][k]).sum();
                for (gp, j) in g.iter_mut().zip(&jac[k]) {
                    *gp += dl_dz * j;
                }
            }
            Ok((sample_loss(&p, s.y), g))
        })
        .collect::<Result<_>>()?;
    let n = batch.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for (l, g) in &per_sample {
        loss += l;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|a| *a /= n);
    Ok((loss / n, grad))
}

/// Gradient of the batch loss.
pub fn gradient(c: &Circuit, batch: &[Sample], theta: &[f64], n_classes: usize, tcfg: &TrainConfig) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(c, batch, theta, n_classes, tcfg.shift)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub theta: Vec<f64>,
    /// Full training-set loss before training and after every epoch.
    pub history: Vec<f64>,
}

/// Minibatch Adam from parameters uniform over `[0, 2π)`.
pub fn train(c: &Circuit, train_set: &[Sample], n_classes: usize, tcfg: &TrainConfig) -> Result<TrainResult> {
    let mut rng = rng_from(derive(tcfg.seed, "init", 0));
    let theta0 = (0..c.n_trainable())
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    train_from(c, train_set, n_classes, tcfg, theta0)
}

/// [`train`] from explicit starting parameters.
pub fn train_from(
    c: &Circuit,
    train_set: &[Sample],
    n_classes: usize,
    tcfg: &TrainConfig,
    mut theta: Vec<f64>,
) -> Result<TrainResult> {
    tcfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidDataset("empty training set".into()));
    }
    if theta.len() != c.n_trainable() {
        return Err(Error::ParameterLength {
            expected: c.n_trainable(),
            actual: theta.len(),
        });
    }
    readout_width(c, n_classes)?;
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut step = 0i32;
    let mut history = vec![mean_loss(c, train_set, &theta, n_classes)?];
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..tcfg.epochs {
        order.shuffle(&mut rng_from(derive(tcfg.seed, "shuffle", epoch as u64)));
        for chunk in order.chunks(tcfg.batch) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let (_, g) = loss_and_gradient(c, &batch, &theta, n_classes, tcfg.shift)?;
            step += 1;
            let (bc1, bc2) = (1.0 - tcfg.beta1.powi(step), 1.0 - tcfg.beta2.powi(step));
            for i in 0..theta.len() {
                m[i] = tcfg.beta1 * m[i] + (1.0 - tcfg.beta1) * g[i];
                v[i] = tcfg.beta2 * v[i] + (1.0 - tcfg.beta2) * g[i] * g[i];
                theta[i] -= tcfg.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + tcfg.eps);
            }
        }
        history.push(mean_loss(c, train_set, &theta, n_classes)?);
    }
    Ok(TrainResult { theta, history })
}

fn mean_loss(c: &Circuit, set: &[Sample], theta: &[f64], n_classes: usize) -> Result<f64> {
    let losses: Vec<f64> = set
        .par_iter()
        .map(|s| Ok(sample_loss(&predict(c, &s.x, theta, n_classes)?, s.y)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / set.len() as f64)
}

/// Where evaluation circuits run.
#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Noiseless,
    /// Noise-model distributions; sample `i` uses the stream `(seed, "eval", i)`.
    Noisy {
        dev: &'a DeviceModel,
        cfg: &'a RunConfig,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub mse: f64,
}

/// Accuracy (argmax, ties to the lowest class) and MSE over `set`.
pub fn evaluate(c: &Circuit, theta: &[f64], set: &[Sample], n_classes: usize, backend: Backend) -> Result<Metrics> {
    if set.is_empty() {
        return Err(Error::InvalidDataset("empty evaluation set".into()));
    }
    let width = readout_width(c, n_classes)?;
    let per: Vec<(bool, f64)> = set
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let b = Binding::new(&s.x, theta);
            let z = match backend {
                Backend::Noiseless => z_of(c, &b, width)?,
                Backend::Noisy { dev, cfg, seed } => {
                    let d = noisy_dist_seeded(c, dev, Some(&b), cfg, derive(seed, "eval", i as u64))?;
                    d.z_expectations()[..width].to_vec()
                }
            };
            let p = probs_from_z(&z, n_classes);
            Ok((argmax(&p) == s.y, sample_loss(&p, s.y)))
        })
        .collect::<Result<_>>()?;
    let n = set.len() as f64;
    Ok(Metrics {
        accuracy: per.iter().filter(|(ok, _)| *ok).count() as f64 / n,
        mse: per.iter().map(|(_, l)| l).sum::<f64>() / n,
    })
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CircuitBuilder, Gate, GateKind, QubitCalibration};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ry_circuit() -> Circuit {
        CircuitBuilder::new(1)
            .gate(Gate::rotation(GateKind::Ry, 0, ParamRole::Trainable(0)))
            .build()
            .unwrap()
    }

    #[test]
    fn predict_examples() {
        let id = CircuitBuilder::new(1)
            .gate(Gate::rotation(GateKind::Rz, 0, ParamRole::Trainable(0)))
            .build()
            .unwrap();
        let p = predict(&id, &[], &[0.3], 2).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = predict(&ry_circuit(), &[], &[FRAC_PI_2], 2).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        let u = probs_from_z(&[0.2, 0.2, 0.2], 3);
        assert!(u.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
        assert!(predict(&ry_circuit(), &[], &[0.0], 3).is_err());
    }

    #[test]
    fn ry_derivative_is_minus_sine() {
        let (z, jac) = expectation_jacobian(&ry_circuit(), &[], &[PI / 3.0], 1, FRAC_PI_2).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-12);
        assert!((jac[0][0] + (PI / 3.0).sin()).abs() < 1e-9);
    }

    #[test]
    fn shared_parameter_sums_contributions() {
        // RY(θ) twice on the same parameter: ⟨Z⟩ = cos 2θ.
        let c = CircuitBuilder::new(1)
            .gates([
                Gate::rotation(GateKind::Ry, 0, ParamRole::Trainable(0)),
                Gate::rotation(GateKind::Ry, 0, ParamRole::Trainable(0)),
            ])
            .build()
            .unwrap();
        let t = 0.37;
        let (_, jac) = expectation_jacobian(&c, &[], &[t], 1, FRAC_PI_2).unwrap();
        assert!((jac[0][0] + 2.0 * (2.0 * t).sin()).abs() < 1e-9);
    }

    #[test]
    fn embedding_only_circuit_has_empty_gradient() {
        let c = CircuitBuilder::new(1)
            .gate(Gate::rotation(GateKind::Rx, 0, ParamRole::Embedding(0)))
            .build()
            .unwrap();
        let batch = vec![Sample { x: vec![0.4], y: 1 }];
        assert!(gradient(&c, &batch, &[], 2, &TrainConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let c = ry_circuit();
        let set = vec![Sample { x: vec![], y: 1 }, Sample { x: vec![], y: 0 }];
        let tcfg = TrainConfig { lr: 0.0, epochs: 5, batch: 1, ..Default::default() };
        let r = train_from(&c, &set, 2, &tcfg, vec![1.1]).unwrap();
        assert_eq!(r.theta, vec![1.1]);
        assert_eq!(r.history.len(), 6);
    }

    #[test]
    fn evaluate_perfect_and_destroyed() {
        // RX(x) with x ∈ {0, π} maps labels to |0⟩/|1⟩ exactly.
        let c = CircuitBuilder::new(1)
            .gate(Gate::rotation(GateKind::Rx, 0, ParamRole::Embedding(0)))
            .build()
            .unwrap();
        let set: Vec<Sample> = (0..20).map(|i| Sample { x: vec![PI * (i % 2) as f64], y: i % 2 }).collect();
        let m = evaluate(&c, &[], &set, 2, Backend::Noiseless).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.mse < 1e-20);

        let dev = DeviceModel::new(
            "flip",
            vec![QubitCalibration { t1_us: 1.0, t2_us: 1.0, readout_fidelity: 0.5, err_1q: 0.0 }],
            vec![],
        )
        .unwrap();
        let cfg = RunConfig::default();
        let m = evaluate(&c, &[], &set, 2, Backend::Noisy { dev: &dev, cfg: &cfg, seed: 0 }).unwrap();
        // Uniform output; ties go to class 0.
        assert_eq!(m.accuracy, 0.5);
        assert!((m.mse - 0.25).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch: 0, ..Default::default() },
            TrainConfig { lr: -1.0, ..Default::default() },
            TrainConfig { shift: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
