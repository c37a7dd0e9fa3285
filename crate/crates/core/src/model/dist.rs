use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Probability distribution over the `2^n_bits` outcomes of the measured
/// qubits. Outcome index bit `k` is measured qubit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    n_bits: usize,
    probs: Vec<f64>,
}

impl ProbDist {
    /// Checked constructor: entries must be non-negative and sum to 1.
    pub fn new(n_bits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << n_bits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_bits,
                actual: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(ProbDist { n_bits, probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(n_bits: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        ProbDist::new(n_bits, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point(n_bits: usize, outcome: usize) -> Self {
        let mut probs = vec![0.0; 1 << n_bits];
        probs[outcome] = 1.0;
        ProbDist { n_bits, probs }
    }

    pub fn uniform(n_bits: usize) -> Self {
        let len = 1usize << n_bits;
        ProbDist {
            n_bits,
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub(crate) fn from_raw(n_bits: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << n_bits);
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        ProbDist { n_bits, probs }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Marginal over the listed bit positions; new bit `k` is old bit `bits[k]`.
    pub fn marginal(&self, bits: &[usize]) -> Result<ProbDist> {
        if bits.is_empty() {
            return Err(Error::EmptyMeasurement);
        }
        if let Some(&b) = bits.iter().find(|&&b| b >= self.n_bits) {
            return Err(Error::InvalidDistribution(format!(
                "bit {b} out of range for {} bits",
                self.n_bits
            )));
        }
        let mut out = vec![0.0; 1 << bits.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            let j = bits
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &b)| acc | (((i >> b) & 1) << k));
            out[j] += p;
        }
        Ok(ProbDist::from_raw(bits.len(), out))
    }

    /// ⟨Z⟩ on each bit: Σ (−1)^bit · p.
    pub fn z_expectations(&self) -> Vec<f64> {
        (0..self.n_bits)
            .map(|k| {
                self.probs
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| if (i >> k) & 1 == 0 { p } else { -p })
                    .sum()
            })
            .collect()
    }

    pub fn tvd(&self, other: &ProbDist) -> Result<f64> {
        tvd(self, other)
    }
}

/// Total variation distance, ½ Σ |p_i − q_i|.
pub fn tvd(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    if p.n_bits != q.n_bits {
        return Err(Error::DimensionMismatch {
            expected: p.n_bits,
            actual: q.n_bits,
        });
    }
    let d: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * d).min(1.0))
}
